#ifndef ISPEC_ISPEC_HPP
#define ISPEC_ISPEC_HPP

#include "ispec/cidp.hpp"
#include "ispec/citest.hpp"
#include "ispec/cli.hpp"
#include "ispec/data_table.hpp"
#include "ispec/errors.hpp"
#include "ispec/estimate.hpp"
#include "ispec/expression.hpp"
#include "ispec/fci.hpp"
#include "ispec/graph.hpp"
#include "ispec/graph_io.hpp"
#include "ispec/graph_ops.hpp"
#include "ispec/invariance.hpp"
#include "ispec/parallel.hpp"
#include "ispec/scm.hpp"
#include "ispec/search.hpp"
#include "ispec/simplify.hpp"
#include "ispec/vertex_set.hpp"

#endif  // ISPEC_ISPEC_HPP

#ifndef PLCL_PLCL_HPP
#define PLCL_PLCL_HPP

#include "plcl/data.hpp"
#include "plcl/dataset.hpp"
#include "plcl/error.hpp"
#include "plcl/eval.hpp"
#include "plcl/graph.hpp"
#include "plcl/kernel.hpp"
#include "plcl/model.hpp"
#include "plcl/qp.hpp"
#include "plcl/serialize.hpp"
#include "plcl/types.hpp"

#endif  // PLCL_PLCL_HPP

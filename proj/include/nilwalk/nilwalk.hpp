#ifndef NILWALK__NILWALK_HPP_
#define NILWALK__NILWALK_HPP_

#include "nilwalk/albanese.hpp"
#include "nilwalk/algebra.hpp"
#include "nilwalk/error.hpp"
#include "nilwalk/experiments.hpp"
#include "nilwalk/finsler.hpp"
#include "nilwalk/io.hpp"
#include "nilwalk/lattice_oracle.hpp"
#include "nilwalk/optimize.hpp"
#include "nilwalk/quotient_graph.hpp"
#include "nilwalk/random.hpp"
#include "nilwalk/rate.hpp"
#include "nilwalk/realization.hpp"
#include "nilwalk/walker.hpp"

#endif  // NILWALK__NILWALK_HPP_

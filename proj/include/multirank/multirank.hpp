#ifndef MULTIRANK_MULTIRANK_HPP
#define MULTIRANK_MULTIRANK_HPP

#include "multirank/asymptotics.hpp"
#include "multirank/changepoint.hpp"
#include "multirank/covariance.hpp"
#include "multirank/csv_io.hpp"
#include "multirank/data_matrix.hpp"
#include "multirank/homogeneity.hpp"
#include "multirank/ranks.hpp"
#include "multirank/simulation.hpp"

#endif

#include "spr/normal.hpp"

#include <boost/math/distributions/normal.hpp>

namespace spr {

double normal_cdf(double z) {
    return boost::math::cdf(boost::math::normal_distribution<double>{}, z);
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

} // namespace spr

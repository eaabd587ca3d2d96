#include "crisp/geo.hpp"

#include "crisp/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace crisp {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::int64_t snapped_floor(double q) {
    const double nearest = std::round(q);
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(q));
    if (std::abs(q - nearest) <= tol) return static_cast<std::int64_t>(nearest);
    return static_cast<std::int64_t>(std::floor(q));
}

}  // namespace

void validate(const GeoPoint& p) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
        throw InvalidCoordinateError("invalid coordinate (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                                     ")");
    }
}

double haversine_m(const GeoPoint& p, const GeoPoint& q) {
    validate(p);
    validate(q);
    const double phi1 = p.lat * kDegToRad;
    const double phi2 = q.lat * kDegToRad;
    const double dphi = (q.lat - p.lat) * kDegToRad;
    const double dlambda = (q.lon - p.lon) * kDegToRad;
    const double s_phi = std::sin(dphi / 2.0);
    const double s_lambda = std::sin(dlambda / 2.0);
    double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lambda * s_lambda;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

BlockId block_of(double lat, double lon, double cell_deg) {
    validate(GeoPoint{lat, lon});
    if (!(cell_deg > 0.0)) throw InvalidCoordinateError("cell size must be positive");
    return BlockId{snapped_floor(lat / cell_deg), snapped_floor(lon / cell_deg)};
}

}  // namespace crisp

#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace crisp {

/// IUGG mean Earth radius in meters.
inline constexpr double kEarthRadiusM = 6'371'008.8;

/// Latitude/longitude in decimal degrees (WGS 84).
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Throws InvalidCoordinateError unless lat in [-90, 90] and lon in [-180, 180].
void validate(const GeoPoint& p);

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& p, const GeoPoint& q);

/// Index of a square lat/lon cell; cells are half-open [i*cell, (i+1)*cell).
struct BlockId {
    std::int64_t lat_index = 0;
    std::int64_t lon_index = 0;

    friend auto operator<=>(const BlockId&, const BlockId&) = default;
};

/// (floor(lat / cell_deg), floor(lon / cell_deg)).
///
/// Quotients that land within a few ulps of an integer are snapped to it, so
/// 0.3 / 0.1 is block 3 rather than 2.9999999999999996 -> 2.
BlockId block_of(double lat, double lon, double cell_deg = 0.1);

}  // namespace crisp

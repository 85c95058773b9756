#pragma once

// Independent reference implementations the tests compare against.

#include <set>
#include <span>
#include <string>
#include <vector>

#include "heprep/event.hpp"
#include "heprep/model.hpp"
#include "heprep/query.hpp"

namespace testsupport {

/// Brute-force filter: paths chosen by scanning every instance, the kept set
/// closed over ancestors, then a fresh copy assembled from that set.
std::set<std::string> oracle_selected(const heprep::Document& doc, const heprep::InstanceRequest& request);
heprep::InstanceTree oracle_get_instances(const heprep::Document& doc, const heprep::InstanceRequest& request);

struct OracleFit {
    long double slopeX = 0, interceptX = 0, slopeY = 0, interceptY = 0, chi2 = 0;
};

/// Normal equations solved by Cramer's rule in long double.
OracleFit oracle_fit(std::span<const heprep::TrackHit> hits);

bool close_rel(long double a, long double b, long double tol);

}  // namespace testsupport

#pragma once

// JSON serialization of analysis results. Floats are IEEE-754 doubles
// (non-finite values become null), words are integer arrays with a 1-based
// output index.

#include <json.hpp>

#include "obsvlab/gramian.hpp"
#include "obsvlab/obsv.hpp"
#include "obsvlab/sim.hpp"

namespace obsvlab {

using Json = nlohmann::ordered_json;

Json to_json(const CascadeSystem& sys);
Json to_json(const std::vector<Violation>& violations);
Json to_json(const ObservableWord& w);
Json to_json(const Mismatch& m);
Json to_json(const PeriodicityVerdict& v);
Json to_json(const SystemPeriodicity& v);
Json to_json(const SeparationCertificate& c);
Json to_json(const RankReport& r);
Json to_json(const GramianReport& g);
Json to_json(const ShiftExperiment& e);
Json to_json(const DistinguishResult& d);
Json to_json(const PeriodOptions& o);

}  // namespace obsvlab

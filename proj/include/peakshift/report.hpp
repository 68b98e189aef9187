#pragma once

// JSON views of the library's result types, plus small output helpers.

#include <string>

#include <json.hpp>

#include "peakshift/calibration.hpp"
#include "peakshift/classify.hpp"
#include "peakshift/diagnostics.hpp"
#include "peakshift/fit.hpp"
#include "peakshift/shrinkage.hpp"
#include "peakshift/synth.hpp"

namespace peakshift {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal form; "nan"/"inf" spelled out.
std::string format_double(double v);

// Finite doubles as numbers, everything else as null.
ordered_json number_or_null(double v);

ordered_json to_json(const FitResult& fit);
ordered_json to_json(const ModelFits& fits);
ordered_json to_json(const LrtResult& lrt);
ordered_json to_json(const AggregateClass& cls);
ordered_json to_json(const AggregateAssessment& a);
ordered_json to_json(const StrictGateReport& r);
ordered_json to_json(const CalibrationReport& r);
ordered_json to_json(const PrevalenceEstimate& p);
ordered_json to_json(const DistortionReport& r);
ordered_json to_json(const SelectionSummary& s);
ordered_json to_json(const PooledResult& r);
ordered_json to_json(const WithinUserPermutation& r);
ordered_json to_json(const HierarchicalSummary& s);
ordered_json to_json(const FactorialCell& c);
ordered_json to_json(const PowerCell& c);

}  // namespace peakshift

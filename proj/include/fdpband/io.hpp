#pragma once

#include <string>

#include <json.hpp>

#include "fdpband/fdp.hpp"
#include "fdpband/selection.hpp"

namespace fdpband {

// All writers go through a temp file + rename so readers never observe a
// partially written file. Doubles are printed with %.17g so files parse back
// to bit-identical values.

std::string format_double(double v);
void write_text_atomic(const std::string& path, const std::string& content);

// p-value CSV: optional "# key=value" comment lines (n is stored this way),
// header "p[,is_null]", one row per test point.
PValueVector read_pvalue_csv(const std::string& path, bool jitter_ties = false);
void write_pvalue_csv(const std::string& path, const PValueVector& p);

// Curve CSV: "# delta=..." and "# mhat0=..." comments, then
// t,n_reject,bound_naive,bound_refined,bound_combined[,fdp_true].
FdpBoundCurve read_curve_csv(const std::string& path);
void write_curve_csv(const std::string& path, const FdpBoundCurve& curve);
nlohmann::json curve_to_json(const FdpBoundCurve& curve);

// Selection CSVs: calibration "muhat,y,c"; test "muhat,c[,y_true]".
SelectionProblem read_selection_csvs(const std::string& calib_path,
                                     const std::string& test_path,
                                     std::uint64_t seed);
void write_selection_csvs(const std::string& calib_path,
                          const std::string& test_path,
                          const SelectionProblem& problem);

}  // namespace fdpband

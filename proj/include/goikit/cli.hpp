#pragma once

// Entry point of the goi_kit command-line tool, kept in the library so tests
// can drive it in-process.
//
// Exit codes: 0 success / healthy, 1 error, 2 dynamic flags present,
// 3 near-degenerate.

#include <iosfwd>
#include <string>
#include <vector>

namespace goikit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFlags = 2;
inline constexpr int kExitDegenerate = 3;

std::string version();

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// CSV header for experiment records.
inline constexpr const char* kRecordHeader = "experiment,n,d,trial,statistic,value,seed";
/// CSV header for per-feature reports.
inline constexpr const char* kReportHeader =
    "feature_id,goi,rho1,psi_1,psi_2,psi_3,psi_4,psi_5,psi_6,flagged";

}  // namespace goikit::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "calppi/calibrators.hpp"
#include "calppi/design.hpp"
#include "calppi/inference.hpp"

namespace calppi::cli {

// CSV dialect: comma separated, header row, '.' decimal point, no quoting.
// Labeled files need columns y and score; unlabeled files need score.
LabeledSample read_labeled_csv(std::istream& in, const std::string& source,
                               const std::vector<std::string>& covariate_columns = {});
UnlabeledSample read_unlabeled_csv(std::istream& in, const std::string& source,
                                   const std::vector<std::string>& covariate_columns = {});
LabeledSample read_labeled_csv(const std::string& path,
                               const std::vector<std::string>& covariate_columns = {});
UnlabeledSample read_unlabeled_csv(const std::string& path,
                                   const std::vector<std::string>& covariate_columns = {});

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

void write_labeled_csv(std::ostream& out, const LabeledSample& sample,
                       const std::vector<std::string>& covariate_columns = {});
void write_unlabeled_csv(std::ostream& out, const UnlabeledSample& sample,
                         const std::vector<std::string>& covariate_columns = {});

nlohmann::json report_to_json(const EstimateReport& report);
EstimateReport report_from_json(const nlohmann::json& j);

nlohmann::json bootstrap_to_json(Method method, const BootstrapResult& result);

nlohmann::json calibrator_to_json(const Calibrator& calibrator);
Calibrator calibrator_from_json(const nlohmann::json& j);

// Entry point shared by the executable and the tests. Returns the process
// exit code: 0 success, 2 user/config/data error, 1 internal error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace calppi::cli

#ifndef MCDM_SRC_CLI_REPORTS_HPP
#define MCDM_SRC_CLI_REPORTS_HPP

#include <vector>

#include "mcdm/cli.hpp"
#include "mcdm/interpret.hpp"
#include "mcdm/select.hpp"

namespace mcdm::cli {

std::vector<Report> fit_reports(const FitResult& fit, const DesignSet& design, const FitOptions& options);
Report selection_report(const SelectionResult& result, const SelectionData& data);
std::vector<Report> bootstrap_reports(const BootstrapResult& boot, const FitResult& estimate,
                                      const DesignSet& design);
Report prediction_report(const std::vector<Prediction>& predictions, const std::vector<std::string>& category_labels,
                         const DesignSet& design);

}  // namespace mcdm::cli

#endif  // MCDM_SRC_CLI_REPORTS_HPP

// Cross-validated error of each SVM kernel on one small perfect-label table.

#include <iostream>

#include "fairsim/calibrate.hpp"

int main() {
  using namespace fairsim;
  ExperimentPlan plan;
  plan.scenarios = {Scenario::ThresholdBinary};
  CalibrationSettings settings;
  settings.n_train = 100;
  const TrainingTable table = calibration_table(plan, settings, Scenario::ThresholdBinary, 0);
  for (const auto& kernel : calibration_kernels(table.width())) {
    std::cout << kernel_name(kernel) << ": " << svm_kernel_cv_error(table, kernel, 10, 1) << '\n';
  }
}

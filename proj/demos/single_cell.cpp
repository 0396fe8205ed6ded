// Simulate one world, fit a logistic regression on perfect and on biased
// labels, and compare top-1 accuracy on the held-out competitions.

#include <iostream>

#include "fairsim/experiment.hpp"
#include "fairsim/models/model.hpp"

int main() {
  using namespace fairsim;
  ScenarioConfig config;
  config.scenario = Scenario::ThresholdBinary;
  config.alpha = 0.2;
  config.bias_param = threshold_grid(5).binary.back();  // ~97% of candidates censored
  config.n_train = 1000;
  config.n_test = 200;
  config.master_seed = 7;
  const DatasetBundle bundle = simulate(config);

  for (View view : {View::Full, View::Anonymous}) {
    for (LabelSource labels : {LabelSource::Perfect, LabelSource::Biased}) {
      const FittedModel model = fit_algorithm(Algorithm::Logistic, bundle.table(view, labels));
      RandomStream rng(config.master_seed, {stream::kEvaluation});
      std::cout << to_string(view) << " / " << to_string(labels)
                << ": accuracy " << top1_accuracy(model, bundle, view, rng) << '\n';
      if (view == View::Full && labels == LabelSource::Biased) {
        write_coefficient_table(std::cout, *model.logistic_fit());
      }
    }
  }
}

#pragma once

#include "fairsim/analysis.hpp"
#include "fairsim/calibrate.hpp"
#include "fairsim/common.hpp"
#include "fairsim/config.hpp"
#include "fairsim/dataset_io.hpp"
#include "fairsim/experiment.hpp"
#include "fairsim/models/cv.hpp"
#include "fairsim/models/knn.hpp"
#include "fairsim/models/lbfgs.hpp"
#include "fairsim/models/logistic.hpp"
#include "fairsim/models/mlp.hpp"
#include "fairsim/models/model.hpp"
#include "fairsim/models/stepwise.hpp"
#include "fairsim/models/svm.hpp"
#include "fairsim/plot.hpp"
#include "fairsim/rng.hpp"
#include "fairsim/simgen.hpp"
#include "fairsim/stats.hpp"
#include "fairsim/svg.hpp"
#include "fairsim/table.hpp"

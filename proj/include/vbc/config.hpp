#ifndef VBC_CONFIG_HPP
#define VBC_CONFIG_HPP

#include <string>

#include <json.hpp>

#include "vbc/model.hpp"

namespace vbc {

// A model configuration file has three sections:
//
//   {
//     "likelihood": {"family": "poisson_log"},
//     "effects": [
//       {"kind": "fixed", "name": "intercept"},
//       {"kind": "fixed", "name": "slope", "covariate": "x"},
//       {"kind": "cyclic_rw2", "name": "day", "size": 366,
//        "index": "day", "prior_precision": 100.0}
//     ],
//     "data": {"response": "y", "trials": "ntrials"}
//   }
//
// Fixed effects default to prior_precision 0.001; "standardize": true
// centers and scales a covariate column.
struct ModelConfig {
    ModelSpec model;  // n_obs filled when data is bound
    std::string response_column;
    std::string trials_column;  // empty unless binomial
    nlohmann::json echo;        // parsed configuration, for run reports
};

ModelConfig parse_model_config(const std::string& path);
ModelConfig parse_model_config_text(const std::string& text, const std::string& origin);

// Pulls the response (and trials) out of the table and fixes n_obs.
ObservationData bind_data(ModelConfig& config, const DataTable& table);

}  // namespace vbc

#endif

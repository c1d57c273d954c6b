#include "vbc/config.hpp"

#include <fstream>
#include <sstream>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& origin, const std::string& text,
                             const json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                      e.what());
}

Family parse_family(const std::string& name) {
    if (name == "poisson_log" || name == "poisson") return Family::PoissonLog;
    if (name == "binomial_logit" || name == "binomial") return Family::BinomialLogit;
    if (name == "gaussian_identity" || name == "gaussian") return Family::GaussianIdentity;
    throw ConfigError("unknown likelihood family '" + name + "'");
}

EffectKind parse_kind(const std::string& name) {
    if (name == "fixed") return EffectKind::FixedEffect;
    if (name == "iid") return EffectKind::IID;
    if (name == "rw1") return EffectKind::RW1;
    if (name == "rw2") return EffectKind::RW2;
    if (name == "cyclic_rw2") return EffectKind::CyclicRW2;
    throw ConfigError("unknown effect kind '" + name + "'");
}

}  // namespace

ModelConfig parse_model_config_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(origin, text, e);
    }

    ModelConfig config;
    config.echo = doc;
    try {
        const json& lik = doc.at("likelihood");
        config.model.likelihood.family = parse_family(lik.at("family").get<std::string>());
        if (lik.contains("tau_obs")) {
            config.model.likelihood.tau_obs = lik.at("tau_obs").get<double>();
        }

        for (const json& je : doc.at("effects")) {
            EffectSpec e;
            e.kind = parse_kind(je.at("kind").get<std::string>());
            e.name = je.value("name", std::string());
            e.covariate = je.value("covariate", std::string());
            e.index_column = je.value("index", std::string());
            e.standardize = je.value("standardize", false);
            if (e.kind == EffectKind::FixedEffect) {
                e.size = 1;
                e.prior_precision = je.value("prior_precision", 0.001);
                if (e.name.empty()) e.name = e.covariate.empty() ? "intercept" : e.covariate;
            } else {
                e.size = je.at("size").get<int>();
                e.prior_precision = je.at("prior_precision").get<double>();
                if (e.name.empty()) throw ConfigError("indexed effects need a name");
            }
            config.model.effects.push_back(std::move(e));
        }

        const json& data = doc.at("data");
        config.response_column = data.at("response").get<std::string>();
        config.trials_column = data.value("trials", std::string());
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    if (config.model.likelihood.family == Family::BinomialLogit &&
        config.trials_column.empty()) {
        throw ConfigError(origin + ": binomial likelihood needs data.trials");
    }
    return config;
}

ModelConfig parse_model_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_config_text(buf.str(), path);
}

ObservationData bind_data(ModelConfig& config, const DataTable& table) {
    if (!table.has_column(config.response_column)) {
        throw ConfigError("response column '" + config.response_column + "' not in data");
    }
    ObservationData data;
    data.y = table.column(config.response_column);
    data.covariates = table;
    if (!config.trials_column.empty()) {
        if (!table.has_column(config.trials_column)) {
            throw ConfigError("trials column '" + config.trials_column + "' not in data");
        }
        data.trials = table.column(config.trials_column);
    }
    config.model.n_obs = static_cast<int>(data.y.size());
    validate(config.model, data);
    return data;
}

}  // namespace vbc

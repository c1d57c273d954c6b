#include "vbc/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vbc/errors.hpp"

namespace vbc {

void DataTable::add_column(std::string name, Eigen::VectorXd values) {
    if (!columns_.empty() && values.size() != n_rows_) {
        throw ConfigError("data column '" + name + "' has " +
                          std::to_string(values.size()) + " rows, expected " +
                          std::to_string(n_rows_));
    }
    if (has_column(name)) {
        throw ConfigError("duplicate data column '" + name + "'");
    }
    n_rows_ = values.size();
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

bool DataTable::has_column(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const Eigen::VectorXd& DataTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return columns_[i];
    }
    throw ConfigError("data column '" + name + "' not found");
}

const char* effect_kind_name(EffectKind k) {
    switch (k) {
        case EffectKind::FixedEffect: return "fixed";
        case EffectKind::IID: return "iid";
        case EffectKind::RW1: return "rw1";
        case EffectKind::RW2: return "rw2";
        case EffectKind::CyclicRW2: return "cyclic_rw2";
    }
    return "?";
}

std::pair<int, int> LatentLayout::block_of_effect(int effect_index) const {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const Block& blk = blocks[b];
        if (effect_index >= blk.offset && effect_index < blk.offset + blk.size) {
            return {static_cast<int>(b), effect_index - blk.offset};
        }
    }
    throw ConfigError("effect index " + std::to_string(effect_index) + " out of range");
}

int LatentLayout::effect_index(int block, int within) const {
    const Block& blk = blocks.at(block);
    if (within < 0 || within >= blk.size) {
        throw ConfigError("within-block index out of range for block '" + blk.name + "'");
    }
    return blk.offset + within;
}

namespace {

bool is_intercept(const EffectSpec& e) {
    return e.kind == EffectKind::FixedEffect && e.covariate.empty();
}

}  // namespace

void validate(const ModelSpec& model, const ObservationData& data) {
    const Eigen::Index n = data.y.size();
    if (model.n_obs != n) {
        throw ConfigError("n_obs " + std::to_string(model.n_obs) +
                          " does not match " + std::to_string(n) + " responses");
    }
    if (n == 0) throw ConfigError("empty response vector");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(data.y[i])) {
            throw ConfigError("missing or nonfinite response at row " + std::to_string(i + 1));
        }
    }

    switch (model.likelihood.family) {
        case Family::PoissonLog:
            for (Eigen::Index i = 0; i < n; ++i) {
                if (data.y[i] < 0.0 || data.y[i] != std::floor(data.y[i])) {
                    throw ConfigError("poisson response must be a count >= 0 (row " +
                                      std::to_string(i + 1) + ")");
                }
            }
            break;
        case Family::BinomialLogit: {
            if (!data.trials) {
                throw ConfigError("binomial model requires a trials column");
            }
            const Eigen::VectorXd& tr = *data.trials;
            if (tr.size() != n) throw ConfigError("trials length mismatch");
            for (Eigen::Index i = 0; i < n; ++i) {
                if (tr[i] < 1.0 || tr[i] != std::floor(tr[i])) {
                    throw ConfigError("binomial trial count must be an integer >= 1 (row " +
                                      std::to_string(i + 1) + ")");
                }
                if (data.y[i] < 0.0 || data.y[i] > tr[i]) {
                    throw ConfigError("binomial response outside [0, n_i] (row " +
                                      std::to_string(i + 1) + ")");
                }
            }
            break;
        }
        case Family::GaussianIdentity:
            if (!(model.likelihood.tau_obs > 0.0) || !std::isfinite(model.likelihood.tau_obs)) {
                throw ConfigError("gaussian observation precision must be finite and > 0");
            }
            break;
    }

    if (model.effects.empty()) throw ConfigError("model has no effects");
    int intercepts = 0;
    for (const EffectSpec& e : model.effects) {
        if (!(e.prior_precision > 0.0) || !std::isfinite(e.prior_precision)) {
            throw ConfigError("effect '" + e.name + "': prior_precision must be finite and > 0");
        }
        if (e.size < 1) throw ConfigError("effect '" + e.name + "': size must be positive");
        if (e.kind == EffectKind::FixedEffect) {
            if (e.size != 1) {
                throw ConfigError("fixed effect '" + e.name + "' must have size 1");
            }
            if (is_intercept(e)) ++intercepts;
            if (!e.covariate.empty() && !data.covariates.has_column(e.covariate)) {
                throw ConfigError("covariate column '" + e.covariate + "' not found for effect '" +
                                  e.name + "'");
            }
        } else {
            if ((e.kind == EffectKind::RW2 || e.kind == EffectKind::CyclicRW2) && e.size < 3) {
                throw ConfigError("effect '" + e.name + "': RW2 needs size >= 3");
            }
            if (e.kind == EffectKind::RW1 && e.size < 2) {
                throw ConfigError("effect '" + e.name + "': RW1 needs size >= 2");
            }
            if (e.index_column.empty()) {
                throw ConfigError("effect '" + e.name + "' needs an index column");
            }
            if (!data.covariates.has_column(e.index_column)) {
                throw ConfigError("index column '" + e.index_column + "' not found for effect '" +
                                  e.name + "'");
            }
            const Eigen::VectorXd& idx = data.covariates.column(e.index_column);
            for (Eigen::Index i = 0; i < idx.size(); ++i) {
                if (idx[i] != std::floor(idx[i]) || idx[i] < 1.0 || idx[i] > e.size) {
                    throw ConfigError("effect '" + e.name + "': index out of range [1, " +
                                      std::to_string(e.size) + "] at row " + std::to_string(i + 1));
                }
            }
        }
    }
    if (intercepts > 1) throw ConfigError("model declares more than one intercept");
}

LatentLayout build_layout(const ModelSpec& model, const ObservationData& data) {
    validate(model, data);
    LatentLayout layout;
    layout.n_obs = model.n_obs;
    int offset = 0;
    for (const EffectSpec& e : model.effects) {
        layout.blocks.push_back({e.name, e.kind, offset, e.size});
        offset += e.size;
    }
    layout.m_star = offset;
    return layout;
}

Eigen::SparseMatrix<double> predictor_map(const ModelSpec& model,
                                          const ObservationData& data,
                                          const LatentLayout& layout) {
    const int n = layout.n_obs;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * model.effects.size());
    for (std::size_t b = 0; b < model.effects.size(); ++b) {
        const EffectSpec& e = model.effects[b];
        const int offset = layout.blocks[b].offset;
        if (e.kind == EffectKind::FixedEffect) {
            if (e.covariate.empty()) {
                for (int i = 0; i < n; ++i) trip.emplace_back(i, offset, 1.0);
            } else {
                Eigen::VectorXd x = data.covariates.column(e.covariate);
                if (e.standardize) {
                    const double mean = x.mean();
                    const double sd = std::sqrt((x.array() - mean).square().sum() /
                                                static_cast<double>(x.size() - 1));
                    if (!(sd > 0.0)) {
                        throw ConfigError("cannot standardize constant column '" + e.covariate + "'");
                    }
                    x = (x.array() - mean) / sd;
                }
                for (int i = 0; i < n; ++i) trip.emplace_back(i, offset, x[i]);
            }
        } else {
            const Eigen::VectorXd& idx = data.covariates.column(e.index_column);
            for (int i = 0; i < n; ++i) {
                trip.emplace_back(i, offset + static_cast<int>(idx[i]) - 1, 1.0);
            }
        }
    }
    Eigen::SparseMatrix<double> A(n, layout.m_star);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

LikelihoodData make_likelihood_data(const ModelSpec& model, const ObservationData& data) {
    LikelihoodData lik;
    lik.family = model.likelihood.family;
    lik.y = data.y;
    switch (model.likelihood.family) {
        case Family::BinomialLogit:
            lik.aux = *data.trials;
            break;
        case Family::GaussianIdentity:
            lik.aux = Eigen::VectorXd::Constant(data.y.size(), model.likelihood.tau_obs);
            break;
        case Family::PoissonLog:
            lik.aux = Eigen::VectorXd::Ones(data.y.size());
            break;
    }
    return lik;
}

}  // namespace vbc

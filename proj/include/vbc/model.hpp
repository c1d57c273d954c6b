#ifndef VBC_MODEL_HPP
#define VBC_MODEL_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vbc/likelihood.hpp"

namespace vbc {

// Columnar numeric table, read from CSV with a header row.
class DataTable {
public:
    DataTable() = default;

    void add_column(std::string name, Eigen::VectorXd values);
    bool has_column(const std::string& name) const;
    const Eigen::VectorXd& column(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }
    Eigen::Index n_rows() const { return n_rows_; }

private:
    std::vector<std::string> names_;
    std::vector<Eigen::VectorXd> columns_;
    Eigen::Index n_rows_ = 0;
};

enum class EffectKind {
    FixedEffect,
    IID,
    RW1,
    RW2,
    CyclicRW2,
};

const char* effect_kind_name(EffectKind k);

// One block of the latent field. Fixed effects have size 1 and read a
// covariate column (an intercept when none is given); indexed effects read
// a 1-based index column mapping each observation to a node.
struct EffectSpec {
    EffectKind kind = EffectKind::FixedEffect;
    std::string name;
    int size = 1;
    double prior_precision = 0.001;
    std::string covariate;     // FixedEffect only; empty -> intercept
    std::string index_column;  // indexed effects
    bool standardize = false;  // center/scale the covariate column
};

struct LikelihoodSpec {
    Family family = Family::PoissonLog;
    double tau_obs = 1.0;  // GaussianIdentity observation precision
};

struct ModelSpec {
    LikelihoodSpec likelihood;
    std::vector<EffectSpec> effects;
    int n_obs = 0;
};

struct ObservationData {
    Eigen::VectorXd y;
    DataTable covariates;
    std::optional<Eigen::VectorXd> trials;  // BinomialLogit
};

// Dimension bookkeeping for the augmented field {eta_1..eta_n, effects}:
// predictor indices come first, effect blocks follow in declaration order.
struct LatentLayout {
    struct Block {
        std::string name;
        EffectKind kind;
        int offset = 0;  // into the effect vector
        int size = 0;
    };

    int n_obs = 0;
    int m_star = 0;
    std::vector<Block> blocks;

    int m() const { return n_obs + m_star; }

    // (block index, within-block offset) of an effect-space index.
    std::pair<int, int> block_of_effect(int effect_index) const;
    int effect_index(int block, int within) const;

    // Augmented-field view: index < n_obs is a predictor, otherwise an effect.
    bool is_predictor(int augmented_index) const { return augmented_index < n_obs; }
};

// Checks every ModelSpec/ObservationData invariant; throws ConfigError.
void validate(const ModelSpec& model, const ObservationData& data);

LatentLayout build_layout(const ModelSpec& model, const ObservationData& data);

// n x m* map from effect space to linear predictors: eta = A x.
Eigen::SparseMatrix<double> predictor_map(const ModelSpec& model,
                                          const ObservationData& data,
                                          const LatentLayout& layout);

LikelihoodData make_likelihood_data(const ModelSpec& model, const ObservationData& data);

}  // namespace vbc

#endif

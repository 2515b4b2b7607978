#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "weldpred/dataset.hpp"
#include "weldpred/eval.hpp"
#include "weldpred/linear_model.hpp"
#include "weldpred/net.hpp"
#include "weldpred/svr.hpp"

namespace weldpred {

enum class ModelKind { mlr, svr, mlp, cnn };

const char* kind_name(ModelKind k);
ModelKind parse_kind(std::string_view name);

using AnyModel = std::variant<LinearModel, SvrModel, TrainedNet>;

/// A trained model plus the metadata needed to audit it: the seed it was
/// trained with and the fingerprint of its training data.
struct ModelArtifact {
  ModelKind kind = ModelKind::mlr;
  AnyModel model;
  std::uint64_t seed = 0;
  std::string train_fingerprint;
};

/// Trains the named kind with defaults overridden by a JSON object
/// (e.g. {"epochs": 50}); unknown keys are rejected. Empty string = defaults.
ModelArtifact train_model(ModelKind kind, const Dataset& train, const std::string& config_json,
                          std::uint64_t seed);

/// Synthetic-generator overrides from a JSON object, same conventions as the
/// training configs (empty = defaults, unknown keys rejected).
GeneratorParams generator_params_from_json(const std::string& text);

/// Versioned JSON document; doubles survive the round trip bit-exactly.
void save_model(const ModelArtifact& art, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

/// Uniform prediction across kinds; the CNN path routes x through the
/// gray-image encoding at the model's scale_max.
std::array<double, 3> predict_model(ModelArtifact& art, const WireVector& x);

/// Bound predictor for the evaluation layer; art must outlive it.
Predictor make_predictor(ModelArtifact& art);

/// Human-readable training outcome (iterations, losses, convergence flags).
std::string training_summary(const ModelArtifact& art);

}  // namespace weldpred

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idscope/lipschitz.hpp"
#include "idscope/synth.hpp"

namespace idscope {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kViolation = 3;
inline constexpr int kData = 4;
}  // namespace exit_code

/// {"kind": "UniformBall" | "UnionOfBalls" | "FiniteVocabulary", "intrinsic_dims": [..],
///  "ambient_dim": D, "n_points": n | [..], "offsets": [[..]], "rotate": bool,
///  "seed": s, "vocabulary_size": V}
ManifoldSpec manifold_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ManifoldSpec& spec);

/// {"input_dim": D, "seed": s, "layers": [{"kind": "linear", "out": w, "init":
///  "gaussian" | "orthogonal" | "identity", "scale": c, "bias_std": b}, {"kind": "relu"},
///  {"kind": "tanh"}, {"kind": "rmsnorm", "gain": g, "eps": e},
///  {"kind": "residual", "layers": [..]}]}
LayerSpec layer_spec_from_json(const nlohmann::json& j);
LipschitzNetwork network_from_json(const nlohmann::json& j, std::size_t default_input_dim = 0);

nlohmann::json to_json(const IdEstimate& est);
nlohmann::json to_json(const AuditReport& report);

/// Entry point of the `idscope` executable. `args` excludes the program name;
/// returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idscope

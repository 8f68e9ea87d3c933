#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "zsst/backend.hpp"

namespace zsst {

// Launch settings for an external NLI scorer process (typically a Python
// script wrapping a HuggingFace cross-encoder; see scripts/hf_nli_scorer.py).
struct AdapterConfig {
  std::vector<std::string> command;  // argv, command[0] is the executable
  std::string model_tag = "external";
  std::string unk_token = "<unk>";

  void validate() const;
};

// Backend that delegates scoring and fine-tuning to a child process over
// line-delimited JSON on stdin/stdout. One request line yields exactly one
// response line:
//
//   {"premise": P, "hypotheses": [H...]}      -> {"confidences": [C...]}
//   {"load": {"state_ref": R}}                -> {"ok": true}
//   {"fine_tune": {"pairs": [...], "spec": {...},
//                  "seed": N, "checkpoint_dir": D}} -> {"state_ref": R}
//
// A response {"error": MSG} or a dead child raises TransportError. All pipe
// traffic is serialized behind one mutex, so the adapter is safe to share
// across threads at the cost of serialized scoring.
class TransformerAdapter final : public Backend {
 public:
  explicit TransformerAdapter(AdapterConfig config);
  ~TransformerAdapter() override;

  TransformerAdapter(const TransformerAdapter&) = delete;
  TransformerAdapter& operator=(const TransformerAdapter&) = delete;

  std::vector<double> score_entailment(
      const ModelHandle& handle, std::string_view premise,
      std::span<const std::string> hypotheses) const override;

  ModelHandle fine_tune(const ModelHandle& base,
                        std::span<const NliTrainingPair> pairs,
                        const FineTuneSpec& spec, std::uint64_t seed,
                        const std::filesystem::path& checkpoint_dir) override;

  const ModelHandle& base_handle() const override { return base_handle_; }
  const std::string& unk_token() const override {
    return config_.unk_token;
  }
  std::string_view kind() const override { return "transformer"; }

 private:
  void spawn();
  void shutdown() noexcept;
  void send_line(const std::string& line) const;
  std::string recv_line() const;
  // Round-trips one request. Caller must hold io_mutex_.
  std::string exchange_locked(const std::string& request) const;
  void ensure_loaded_locked(const ModelHandle& handle) const;

  AdapterConfig config_;
  ModelHandle base_handle_;
  int child_pid_ = -1;
  int to_child_ = -1;    // write end of the child's stdin
  int from_child_ = -1;  // read end of the child's stdout
  mutable std::mutex io_mutex_;
  mutable std::string read_buffer_;
  mutable std::string current_state_ref_;
};

}  // namespace zsst

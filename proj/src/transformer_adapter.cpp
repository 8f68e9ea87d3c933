#include "zsst/transformer_adapter.hpp"

#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "zsst/errors.hpp"
#include "zsst/hashing.hpp"

namespace zsst {
namespace {

// A dead child turns writes into SIGPIPE, which would kill the process
// before the adapter can raise TransportError. Ignoring it once per process
// converts those writes into EPIPE errors instead.
void ignore_sigpipe_once() {
  static const bool done = [] {
    struct sigaction sa {};
    if (sigaction(SIGPIPE, nullptr, &sa) == 0 && sa.sa_handler == SIG_DFL) {
      sa.sa_handler = SIG_IGN;
      sigaction(SIGPIPE, &sa, nullptr);
    }
    return true;
  }();
  (void)done;
}

nlohmann::json parse_response(const std::string& line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed scorer response: ") +
                         e.what());
  }
  if (!doc.is_object()) {
    throw TransportError("scorer response is not a JSON object");
  }
  if (doc.contains("error")) {
    throw TransportError("scorer reported: " +
                         doc["error"].get<std::string>());
  }
  return doc;
}

}  // namespace

void AdapterConfig::validate() const {
  if (command.empty()) {
    throw ConfigError("adapter command must not be empty");
  }
  if (unk_token.empty()) throw ConfigError("unk token must not be empty");
}

TransformerAdapter::TransformerAdapter(AdapterConfig config)
    : config_(std::move(config)) {
  config_.validate();
  ignore_sigpipe_once();
  spawn();

  std::string id_src = config_.model_tag;
  for (const std::string& arg : config_.command) {
    id_src += '\0';
    id_src += arg;
  }
  base_handle_.kind = "transformer";
  base_handle_.id = digest_hex(id_src);
  base_handle_.state_ref = "base";
  current_state_ref_ = "base";
}

TransformerAdapter::~TransformerAdapter() { shutdown(); }

void TransformerAdapter::spawn() {
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  int exec_pipe[2]; // child reports exec failure, closed on success
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(exec_pipe) != 0) {
    throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
  }
  fcntl(exec_pipe[1], F_SETFD, FD_CLOEXEC);

  const pid_t pid = fork();
  if (pid < 0) {
    throw TransportError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(exec_pipe[0]);

    std::vector<char*> argv;
    argv.reserve(config_.command.size() + 1);
    for (const std::string& arg : config_.command) {
      argv.push_back(const_cast<char*>(arg.c_str()));
    }
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());

    const int err = errno;
    ssize_t ignored = write(exec_pipe[1], &err, sizeof(err));
    (void)ignored;
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);
  close(exec_pipe[1]);
  child_pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  int exec_errno = 0;
  const ssize_t n = read(exec_pipe[0], &exec_errno, sizeof(exec_errno));
  close(exec_pipe[0]);
  if (n > 0) {
    shutdown();
    throw TransportError("cannot launch scorer '" + config_.command[0] +
                         "': " + std::strerror(exec_errno));
  }
}

void TransformerAdapter::shutdown() noexcept {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
  if (child_pid_ > 0) {
    int status = 0;
    for (int attempt = 0; attempt < 50; ++attempt) {
      const pid_t done = waitpid(child_pid_, &status, WNOHANG);
      if (done == child_pid_ || done < 0) {
        child_pid_ = -1;
        return;
      }
      usleep(10'000);
    }
    kill(child_pid_, SIGKILL);
    waitpid(child_pid_, &status, 0);
    child_pid_ = -1;
  }
}

void TransformerAdapter::send_line(const std::string& line) const {
  std::string framed = line;
  framed += '\n';
  const char* data = framed.data();
  std::size_t remaining = framed.size();
  while (remaining > 0) {
    const ssize_t n = write(to_child_, data, remaining);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("scorer pipe write failed: ") +
                           std::strerror(errno));
    }
    data += n;
    remaining -= static_cast<std::size_t>(n);
  }
}

std::string TransformerAdapter::recv_line() const {
  for (;;) {
    const std::size_t pos = read_buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = read_buffer_.substr(0, pos);
      read_buffer_.erase(0, pos + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("scorer pipe read failed: ") +
                           std::strerror(errno));
    }
    if (n == 0) {
      throw TransportError("scorer process closed the stream");
    }
    read_buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string TransformerAdapter::exchange_locked(
    const std::string& request) const {
  if (child_pid_ <= 0) {
    throw TransportError("scorer process is not running");
  }
  send_line(request);
  return recv_line();
}

void TransformerAdapter::ensure_loaded_locked(const ModelHandle& handle) const {
  if (handle.kind != "transformer") {
    throw ValidationError("handle kind '" + handle.kind +
                          "' is not usable with the transformer adapter");
  }
  if (handle.state_ref == current_state_ref_) return;
  nlohmann::ordered_json req;
  req["load"]["state_ref"] = handle.state_ref;
  parse_response(exchange_locked(req.dump()));
  current_state_ref_ = handle.state_ref;
}

std::vector<double> TransformerAdapter::score_entailment(
    const ModelHandle& handle, std::string_view premise,
    std::span<const std::string> hypotheses) const {
  std::lock_guard<std::mutex> lock(io_mutex_);
  ensure_loaded_locked(handle);

  nlohmann::ordered_json req;
  req["premise"] = std::string(premise);
  req["hypotheses"] = std::vector<std::string>(hypotheses.begin(),
                                               hypotheses.end());
  nlohmann::json doc = parse_response(exchange_locked(req.dump()));

  if (!doc.contains("confidences") || !doc["confidences"].is_array()) {
    throw TransportError("scorer response lacks a confidences array");
  }
  std::vector<double> out;
  out.reserve(doc["confidences"].size());
  for (const auto& v : doc["confidences"]) {
    if (!v.is_number()) {
      throw TransportError("non-numeric confidence in scorer response");
    }
    out.push_back(v.get<double>());
  }
  if (out.size() != hypotheses.size()) {
    throw TransportError("scorer returned " + std::to_string(out.size()) +
                         " confidences for " +
                         std::to_string(hypotheses.size()) + " hypotheses");
  }
  return out;
}

ModelHandle TransformerAdapter::fine_tune(
    const ModelHandle& base, std::span<const NliTrainingPair> pairs,
    const FineTuneSpec& spec, std::uint64_t seed,
    const std::filesystem::path& checkpoint_dir) {
  spec.validate();
  if (pairs.empty()) {
    throw ValidationError("fine_tune called with no training pairs");
  }
  std::lock_guard<std::mutex> lock(io_mutex_);
  ensure_loaded_locked(base);

  nlohmann::ordered_json req;
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const NliTrainingPair& pair : pairs) {
    items.push_back({{"premise", pair.premise},
                     {"hypothesis", pair.hypothesis},
                     {"label", std::string(to_string(pair.label))}});
  }
  req["fine_tune"]["pairs"] = std::move(items);
  req["fine_tune"]["spec"] = {
      {"epochs", spec.epochs},
      {"learning_rate", spec.learning_rate},
      {"batch_size", spec.batch_size},
      {"optimizer", std::string(to_string(spec.optimizer))},
      {"loss", std::string(to_string(spec.loss))}};
  req["fine_tune"]["seed"] = seed;
  req["fine_tune"]["checkpoint_dir"] = checkpoint_dir.string();

  nlohmann::json doc = parse_response(exchange_locked(req.dump()));
  if (!doc.contains("state_ref") || !doc["state_ref"].is_string()) {
    throw TransportError("fine_tune response lacks a state_ref");
  }

  ModelHandle handle;
  handle.kind = "transformer";
  handle.state_ref = doc["state_ref"].get<std::string>();
  handle.id = digest_hex(base.id + "|" + handle.state_ref);
  handle.lineage = base.lineage;
  handle.lineage.push_back(base.id);
  current_state_ref_ = handle.state_ref;
  return handle;
}

}  // namespace zsst

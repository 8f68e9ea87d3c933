// Line-JSON scorer stub for adapter tests. Deterministic confidences are
// derived from (premise, hypothesis, loaded state), so tests can observe
// state switches. Magic premises trigger failure modes:
//   DIE      exit without responding
//   ERR      {"error": ...} response
//   SHORT    wrong confidence count
//   BADJSON  non-JSON output line
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

std::uint64_t fnv(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double confidence(const std::string& premise, const std::string& hypothesis,
                  const std::string& state) {
  const std::uint64_t h = fnv(state, fnv(hypothesis, fnv(premise)));
  return static_cast<double>(h % 10000) / 9999.0;
}

}  // namespace

int main() {
  std::string state = "base";
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    nlohmann::json req = nlohmann::json::parse(line);
    nlohmann::json resp;

    if (req.contains("load")) {
      state = req["load"]["state_ref"].get<std::string>();
      resp["ok"] = true;
    } else if (req.contains("fine_tune")) {
      const auto& ft = req["fine_tune"];
      const std::uint64_t h =
          fnv(std::to_string(ft["seed"].get<std::uint64_t>()),
              fnv(ft["spec"].dump(), fnv(ft["pairs"].dump(), fnv(state))));
      char buf[32];
      std::snprintf(buf, sizeof(buf), "tuned:%016llx",
                    static_cast<unsigned long long>(h));
      state = buf;
      const std::string dir = ft["checkpoint_dir"].get<std::string>();
      if (!dir.empty()) {
        std::ofstream marker(dir + "/state.txt");
        marker << state << "\n";
      }
      resp["state_ref"] = state;
    } else {
      const std::string premise = req["premise"].get<std::string>();
      if (premise == "DIE") return 3;
      if (premise == "ERR") {
        resp["error"] = "synthetic failure";
        std::cout << resp.dump() << "\n" << std::flush;
        continue;
      }
      if (premise == "BADJSON") {
        std::cout << "this is not json {{{\n" << std::flush;
        continue;
      }
      nlohmann::json confidences = nlohmann::json::array();
      if (premise == "SHORT") {
        confidences.push_back(0.5);
      } else {
        for (const auto& hyp : req["hypotheses"]) {
          confidences.push_back(
              confidence(premise, hyp.get<std::string>(), state));
        }
      }
      resp["confidences"] = confidences;
    }
    std::cout << resp.dump() << "\n" << std::flush;
  }
  return 0;
}

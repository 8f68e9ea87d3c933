#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "zsst/backend.hpp"
#include "zsst/errors.hpp"

using namespace zsst;

namespace {

// Returns canned confidences regardless of input; counts calls.
class CannedBackend final : public Backend {
 public:
  explicit CannedBackend(std::vector<double> confidences)
      : confidences_(std::move(confidences)) {
    handle_.kind = "canned";
    handle_.id = "c0";
    handle_.state_ref = "memory:c0";
  }

  std::vector<double> score_entailment(
      const ModelHandle&, std::string_view,
      std::span<const std::string> hypotheses) const override {
    last_hypotheses.assign(hypotheses.begin(), hypotheses.end());
    if (confidences_.size() == hypotheses.size()) return confidences_;
    return confidences_;  // deliberate count mismatch path
  }

  ModelHandle fine_tune(const ModelHandle&, std::span<const NliTrainingPair>,
                        const FineTuneSpec&, std::uint64_t,
                        const std::filesystem::path&) override {
    throw InternalError("not used");
  }

  const ModelHandle& base_handle() const override { return handle_; }
  const std::string& unk_token() const override { return unk_; }
  std::string_view kind() const override { return "canned"; }

  mutable std::vector<std::string> last_hypotheses;

 private:
  std::vector<double> confidences_;
  ModelHandle handle_;
  std::string unk_ = "<unk>";
};

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("nli labels round trip") {
  CHECK(to_string(NliLabel::kEntailment) == "entailment");
  CHECK(to_string(NliLabel::kContradiction) == "contradiction");
  CHECK(parse_nli_label("entailment") == NliLabel::kEntailment);
  CHECK(parse_nli_label("contradiction") == NliLabel::kContradiction);
  CHECK_THROWS_AS(parse_nli_label("neutral"), ValidationError);
}

TEST_CASE("softmax normalizes and is shift-stable") {
  const std::vector<double> scores = {0.1, 0.7, 0.2};
  const std::vector<double> p = softmax(scores);
  REQUIRE(p.size() == 3);
  double sum = 0.0;
  for (double x : p) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[1] > p[0]);
  CHECK(p[1] > p[2]);

  // Huge magnitudes must not overflow.
  const std::vector<double> big = {1000.0, 1001.0, 999.0};
  const std::vector<double> pb = softmax(big);
  CHECK(std::isfinite(pb[0]));
  CHECK(pb[1] > pb[0]);

  const std::vector<double> shifted = {0.1 + 5.0, 0.7 + 5.0, 0.2 + 5.0};
  const std::vector<double> ps = softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(ps[i] == doctest::Approx(p[i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(softmax(std::vector<double>{}), ValidationError);
}

TEST_CASE("classify renders one hypothesis per class in registry order") {
  CannedBackend backend({0.2, 0.9, 0.4});
  const ClassSet classes("demo", {"alpha", "beta", "gamma"});
  const HypothesisTemplate tmpl{std::string(kDefaultTemplatePattern)};
  const Classification c =
      classify(backend, backend.base_handle(), "some text", classes, tmpl);

  REQUIRE(backend.last_hypotheses.size() == 3);
  CHECK(backend.last_hypotheses[0] == "This example is alpha.");
  CHECK(backend.last_hypotheses[1] == "This example is beta.");
  CHECK(backend.last_hypotheses[2] == "This example is gamma.");

  CHECK(c.predicted_index == 1);
  CHECK(c.predicted_class == "beta");
  CHECK(c.raw_scores == std::vector<double>{0.2, 0.9, 0.4});
  double sum = 0.0;
  for (double p : c.probabilities) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classify breaks ties toward the lowest class index") {
  CannedBackend backend({0.5, 0.5, 0.2});
  const ClassSet classes("demo", {"alpha", "beta", "gamma"});
  const HypothesisTemplate tmpl{std::string(kDefaultTemplatePattern)};
  const Classification c =
      classify(backend, backend.base_handle(), "text", classes, tmpl);
  CHECK(c.predicted_index == 0);
  CHECK(c.predicted_class == "alpha");
}

TEST_CASE("classify rejects malformed backend output") {
  const ClassSet classes("demo", {"alpha", "beta", "gamma"});
  const HypothesisTemplate tmpl{std::string(kDefaultTemplatePattern)};

  CannedBackend short_count({0.5, 0.5});
  CHECK_THROWS_AS(
      classify(short_count, short_count.base_handle(), "t", classes, tmpl),
      InternalError);

  CannedBackend out_of_range({0.5, 1.5, 0.2});
  CHECK_THROWS_AS(
      classify(out_of_range, out_of_range.base_handle(), "t", classes, tmpl),
      ValidationError);

  CannedBackend negative({0.5, -0.1, 0.2});
  CHECK_THROWS_AS(
      classify(negative, negative.base_handle(), "t", classes, tmpl),
      ValidationError);
}

}  // TEST_SUITE

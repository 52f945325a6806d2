#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "negspan/errors.hpp"
#include "negspan/tagbaseline.hpp"

using namespace negspan;

namespace {

Tensor uniform_q(std::size_t n, std::size_t k) {
  return Tensor(n, k, 1.0 / static_cast<double>(k));
}

}  // namespace

TEST_SUITE_BEGIN("tagbaseline");

TEST_CASE("tagset interleaves B/I per label with O last") {
  const auto tagset = bio_tagset({"LOC", "PER"});
  CHECK(tagset == std::vector<std::string>{"B-LOC", "I-LOC", "B-PER", "I-PER",
                                           "O"});
}

TEST_CASE("bio_tag_indices maps visible gold only") {
  AnnotatedSentence s;
  s.sentence.tokens = {"a", "b", "c"};
  s.gold = {{1, 2, "PER"}};
  s.hidden = {{3, 3, "LOC"}};  // hidden positions carry O
  const auto z = bio_tag_indices(s, bio_tagset({"LOC", "PER"}));
  CHECK(z == std::vector<std::size_t>{2, 3, 4});
}

TEST_CASE("zero W gives uniform tag distributions of width 2|L|+1") {
  ParamStore store;
  Rng rng(1);
  init_tagger_params(store, 4, 2, rng);
  store.get("tag.w").fill(0.0);

  Tape tape;
  ParamBinding binding(tape, store);
  std::vector<Tape::NodeId> H;
  for (int i = 0; i < 3; ++i) {
    Tensor h(1, 4);
    for (std::size_t k = 0; k < 4; ++k) h[k] = rng.uniform(-1, 1);
    H.push_back(tape.leaf(h));
  }
  const Tensor& q = tape.value(tag_distributions_node(tape, binding, H));
  REQUIRE(q.rows() == 3);
  REQUIRE(q.cols() == 5);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(q.at(i, t) == doctest::Approx(0.2));
    }
  }
}

TEST_CASE("tagging loss analytic values") {
  SUBCASE("perfect confidence gives zero") {
    Tensor q(2, 3);
    q.at(0, 1) = 1.0;
    q.at(1, 0) = 1.0;
    CHECK(tagging_loss(q, {1, 0}) == 0.0);
  }
  SUBCASE("uniform q over k tags and length n gives n ln k") {
    CHECK(tagging_loss(uniform_q(4, 3), {0, 1, 2, 0}) ==
          doctest::Approx(4.0 * std::log(3.0)));
  }
  SUBCASE("hand example ln2 + ln4") {
    Tensor q(2, 3, 0.25);
    q.at(0, 0) = 0.5;
    // q_1[z_1]=0.5, q_2[z_2]=0.25
    CHECK(tagging_loss(q, {0, 1}) ==
          doctest::Approx(std::log(2.0) + std::log(4.0)));
  }
}

TEST_CASE("adjusted loss removes exactly the hidden-span terms") {
  Tensor q(3, 3);
  q.at(0, 0) = 0.5;
  q.at(0, 1) = 0.3;
  q.at(0, 2) = 0.2;
  q.at(1, 0) = 0.1;
  q.at(1, 1) = 0.6;
  q.at(1, 2) = 0.3;
  q.at(2, 0) = 0.25;
  q.at(2, 1) = 0.25;
  q.at(2, 2) = 0.5;
  const std::vector<std::size_t> z{0, 2, 2};

  SUBCASE("empty hidden set equals the plain loss bit for bit") {
    CHECK(adjusted_tagging_loss(q, z, {}) == tagging_loss(q, z));
  }
  SUBCASE("full coverage cancels the loss") {
    CHECK(adjusted_tagging_loss(q, z, {{1, 3, "X"}}) ==
          doctest::Approx(0.0));
  }
  SUBCASE("middle token removed, positions 1 and 3 remain") {
    const double direct = -std::log(q.at(0, 0)) - std::log(q.at(2, 2));
    CHECK(adjusted_tagging_loss(q, z, {{2, 2, "X"}}) ==
          doctest::Approx(direct));
  }
  SUBCASE("out-of-bounds hidden span is a contract violation") {
    CHECK_THROWS_AS(adjusted_tagging_loss(q, z, {{3, 4, "X"}}),
                    ContractViolation);
  }
  SUBCASE("adjusted never exceeds the plain loss") {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
      Tensor qq(4, 3);
      for (std::size_t r = 0; r < 4; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          qq.at(r, c) = rng.uniform(0.05, 1.0);
          sum += qq.at(r, c);
        }
        for (std::size_t c = 0; c < 3; ++c) qq.at(r, c) /= sum;
      }
      std::vector<std::size_t> zz(4);
      for (auto& v : zz) v = rng.index(3);
      const int i = static_cast<int>(rng.range(1, 4));
      const int j = static_cast<int>(rng.range(i, 4));
      CHECK(adjusted_tagging_loss(qq, zz, {{i, j, "X"}}) <=
            tagging_loss(qq, zz) + 1e-12);
    }
  }
}

TEST_CASE("loss nodes agree with the value-level formulas") {
  ParamStore store;
  Rng rng(4);
  store.add_uniform("q_logits", 3, 5, rng, 1.0);

  Tape tape;
  const auto q = tape.softmax_rows(tape.leaf(store.get("q_logits")));
  const std::vector<std::size_t> z{1, 4, 0};
  const SpanSet hidden{{2, 2, "X"}};

  const double plain = tagging_loss(tape.value(q), z);
  const double adjusted = adjusted_tagging_loss(tape.value(q), z, hidden);
  CHECK(tape.value(tagging_loss_node(tape, q, z))[0] ==
        doctest::Approx(plain).epsilon(1e-12));
  CHECK(tape.value(adjusted_tagging_loss_node(tape, q, z, hidden))[0] ==
        doctest::Approx(adjusted).epsilon(1e-12));
}

TEST_CASE("both loss gradients match finite differences") {
  ParamStore store;
  Rng rng(12);
  store.add_uniform("w", 5, 4, rng);
  store.add_uniform("h", 3, 4, rng);
  const std::vector<std::size_t> z{0, 3, 2};
  const SpanSet hidden{{2, 3, "X"}};

  for (const bool adjusted : {false, true}) {
    CAPTURE(adjusted);
    auto build = [&](Tape& tape, Tape::NodeId w, Tape::NodeId h) {
      const auto q = tape.softmax_rows(tape.matmul(h, tape.transpose(w)));
      return adjusted ? adjusted_tagging_loss_node(tape, q, z, hidden)
                      : tagging_loss_node(tape, q, z);
    };
    auto loss_fn = [&](const ParamStore& s) {
      Tape tape;
      return tape.value(
          build(tape, tape.leaf(s.get("w")), tape.leaf(s.get("h"))))[0];
    };
    Tape tape;
    ParamBinding binding(tape, store);
    tape.backward(build(tape, binding["w"], binding["h"]));
    const auto result = fd_check::run(store, binding.grads(), loss_fn);
    INFO("worst entry: ", result.worst);
    CHECK(result.max_rel_err < 1e-4);
  }
}

TEST_CASE("decode_tags takes the argmax with lowest-index ties") {
  CHECK(decode_tags(uniform_q(3, 4)) == std::vector<std::size_t>{0, 0, 0});

  Tensor one_hot(2, 3);
  one_hot.at(0, 2) = 1.0;
  one_hot.at(1, 1) = 1.0;
  CHECK(decode_tags(one_hot) == std::vector<std::size_t>{2, 1});

  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    Tensor q(4, 6);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = rng.uniform(0, 1);
    const auto got = decode_tags(q);
    for (std::size_t r = 0; r < 4; ++r) {
      // brute-force max scan
      std::size_t best = 0;
      for (std::size_t c = 0; c < 6; ++c) {
        if (q.at(r, c) > q.at(r, best)) best = c;
      }
      CHECK(got[r] == best);
    }
  }
}

TEST_SUITE_END();

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "attent/oracle.hpp"
#include "attent/tasks.hpp"
#include "attent/teaching.hpp"

using namespace attent;

namespace {

Matrix random_matrix(int r, int c, RandomSource& rng) {
    Matrix m(r, c);
    for (double& x : m.data) x = rng.gaussian();
    return m;
}

std::vector<LabeledSequence> teacher_data(int n, std::uint64_t seed) {
    TaskSpec spec;
    spec.kind = TaskKind::TeacherNet;
    spec.n = n; spec.s = 3; spec.d = 3; spec.p = 2; spec.v = 1;
    spec.seed = seed;
    return gen_teacher(spec).first.items;
}

}  // namespace

TEST_CASE("residual_scores zero on interpolated data, permutation invariant") {
    TaskSpec spec;
    spec.kind = TaskKind::TeacherNet;
    spec.n = 6; spec.s = 3; spec.d = 3; spec.p = 2; spec.v = 1;
    spec.seed = 5;
    auto [ds, teacher] = gen_teacher(spec);
    for (double s : residual_scores(teacher, ds.items)) CHECK(s == 0.0);

    RandomSource rng(41);
    AttentionParams student = init_params(3, 2, 1, rng);
    const std::vector<double> base = residual_scores(student, ds.items);

    // joint row permutation of features and target of item 0
    LabeledSequence item = ds.items[0];
    std::vector<int> perm{2, 0, 1};
    Matrix pf(3, 3), pt(3, 1);
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 3; ++c) pf(i, c) = item.sequence.features(perm[i], c);
        pt(i, 0) = item.target(perm[i], 0);
    }
    std::vector<LabeledSequence> permuted{{Sequence{pf}, pt}};
    CHECK(residual_scores(student, permuted)[0] == doctest::Approx(base[0]).epsilon(1e-12));

    // entry-wise accumulation oracle
    const Matrix out = forward_self(student, ds.items[1].sequence);
    double acc = 0.0;
    for (size_t k = 0; k < out.data.size(); ++k) {
        const double r = out.data[k] - ds.items[1].target.data[k];
        acc += r * r;
    }
    CHECK(base[1] == doctest::Approx(std::sqrt(acc)).epsilon(1e-14));
}

TEST_CASE("select_hard basics") {
    const std::vector<double> scores{3.0, 1.0, 2.0};
    CHECK(select_hard(scores, 2) == std::vector<int>{0, 2});
    CHECK(select_hard(scores, 3) == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(select_hard(scores, 0), contract_error);
    CHECK_THROWS_AS(select_hard(scores, 4), contract_error);

    const std::vector<double> tied{1.0, 2.0, 2.0, 0.5};
    CHECK(select_hard(tied, 1) == std::vector<int>{1});  // lowest index wins the tie
    CHECK(select_hard(tied, 2) == std::vector<int>{1, 2});
}

TEST_CASE("select_hard equals brute enumeration and ignores positive rescaling") {
    RandomSource rng(42);
    for (int it = 0; it < 200; ++it) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 9);
        const int m = 1 + static_cast<int>(rng.next_u64() % n);
        std::vector<double> scores(n);
        for (double& x : scores) x = std::abs(rng.gaussian());
        if (it % 3 == 0 && n >= 3) scores[2] = scores[0];
        CHECK(select_hard(scores, m) == oracle::brute_select(scores, m));

        std::vector<double> scaled = scores;
        for (double& x : scaled) x *= 7.25;
        CHECK(select_hard(scaled, m) == select_hard(scores, m));
    }
}

TEST_CASE("select_soft covers everything at m = N and matches hard at tiny temperature") {
    RandomSource rng(43);
    std::vector<double> scores{0.1, 5.0, 2.5, 0.01};
    RandomSource src = rng.child(1);
    CHECK(select_soft(scores, 4, 1.0, src) == std::vector<int>{0, 1, 2, 3});

    for (int it = 0; it < 100; ++it) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 8);
        const int m = 1 + static_cast<int>(rng.next_u64() % n);
        std::vector<double> distinct(n);
        for (int i = 0; i < n; ++i) distinct[i] = 0.5 + i + 0.3 * rng.uniform01();
        RandomSource noise = rng.child(100 + it);
        CHECK(select_soft(distinct, m, 1e-9, noise) == select_hard(distinct, m));
    }
    CHECK_THROWS_AS(select_soft(scores, 2, 0.0, rng), contract_error);
    CHECK_THROWS_AS(select_soft(scores, 9, 1.0, rng), contract_error);
}

TEST_CASE("soft selection frequencies track score weights") {
    // two items, scores 3 and 1, temperature 1: pick-1 inclusion should be ~3:1
    RandomSource rng(44);
    const std::vector<double> scores{3.0, 1.0};
    int first = 0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t)
        first += select_soft(scores, 1, 1.0, rng)[0] == 0;
    const double freq = static_cast<double>(first) / trials;
    CHECK(freq > 0.72);
    CHECK(freq < 0.78);
}

TEST_CASE("select_random uniform subsets without duplicates") {
    RandomSource rng(45);
    for (int it = 0; it < 200; ++it) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 9);
        const int m = 1 + static_cast<int>(rng.next_u64() % n);
        const std::vector<int> picked = select_random(n, m, rng);
        CHECK(static_cast<int>(picked.size()) == m);
        std::set<int> uniq(picked.begin(), picked.end());
        CHECK(static_cast<int>(uniq.size()) == m);
        for (int idx : picked) {
            CHECK(idx >= 0);
            CHECK(idx < n);
        }
    }
    CHECK(select_random(5, 5, rng) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(select_random(5, 6, rng), contract_error);
}

TEST_CASE("ratio_at endpoints, midpoints and clamping") {
    const int e = 100;
    const RatioSchedule inc = RatioSchedule::incremental(0.2, 0.8, e);
    CHECK(ratio_at(inc, 0) == doctest::Approx(0.2));
    CHECK(ratio_at(inc, e) == doctest::Approx(0.8));
    CHECK(ratio_at(inc, e / 2) == doctest::Approx(0.5));

    const RatioSchedule cos = RatioSchedule::cosine(0.2, 0.8, e);
    CHECK(ratio_at(cos, 0) == doctest::Approx(0.2));
    CHECK(ratio_at(cos, e) == doctest::Approx(0.8));
    CHECK(ratio_at(cos, e / 2) == doctest::Approx(0.5));

    const RatioSchedule fixed = RatioSchedule::fixed(0.7, e);
    CHECK(ratio_at(fixed, 33) == doctest::Approx(0.7));

    CHECK_THROWS_AS(ratio_at(inc, -1), contract_error);
    CHECK_THROWS_AS(ratio_at(inc, e + 1), contract_error);
    CHECK_THROWS_AS(RatioSchedule::fixed(0.0, e), contract_error);
    CHECK_THROWS_AS(RatioSchedule::incremental(0.5, 0.2, e), contract_error);
}

TEST_CASE("should_reselect schedules") {
    const IntervalSchedule every = IntervalSchedule::fixed(1);
    for (int e = 0; e < 10; ++e) CHECK(should_reselect(every, e));

    const IntervalSchedule five = IntervalSchedule::fixed(5);
    for (int e = 0; e < 20; ++e) CHECK(should_reselect(five, e) == (e % 5 == 0));

    const IntervalSchedule geo = IntervalSchedule::incremental(1, 2.0);
    const std::set<int> expected{0, 1, 3, 7, 15, 31};
    for (int e = 0; e < 40; ++e) CHECK(should_reselect(geo, e) == expected.contains(e));

    CHECK_THROWS_AS(IntervalSchedule::fixed(0), contract_error);
    CHECK_THROWS_AS(IntervalSchedule::incremental(1, 1.0), contract_error);
}

TEST_CASE("teach_loop exits immediately on interpolated data") {
    TaskSpec spec;
    spec.kind = TaskKind::TeacherNet;
    spec.n = 6; spec.s = 3; spec.d = 3; spec.p = 2; spec.v = 1;
    spec.seed = 9;
    auto [ds, teacher] = gen_teacher(spec);
    TeachingConfig cfg;
    cfg.max_iters = 50;
    auto [params, trace] = teach_loop(teacher, ds.items, cfg);
    CHECK(trace.rows.empty());
    CHECK(params.w_q == teacher.w_q);
}

TEST_CASE("teach_loop with ratio one and hard selection is plain SGD bit for bit") {
    const auto data = teacher_data(12, 10);
    RandomSource rng(46);
    const AttentionParams init = init_params(3, 2, 1, rng);

    TeachingConfig cfg;
    cfg.strategy = {SelectionKind::Hard, 1.0};
    cfg.ratio = RatioSchedule::fixed(1.0, 20);
    cfg.interval = IntervalSchedule::fixed(1);
    cfg.eta = 0.4;
    cfg.epsilon = 1e-12;
    cfg.max_iters = 20;
    auto [taught, trace] = teach_loop(init, data, cfg);

    AttentionParams plain = init;
    for (int step = 0; step < 20; ++step) {
        auto [grad, loss] = backward(plain, data);
        (void)loss;
        plain = sgd_step(plain, grad, cfg.eta);
    }
    CHECK(taught.w_q == plain.w_q);
    CHECK(taught.w_k == plain.w_k);
    CHECK(taught.w_v == plain.w_v);
    CHECK(trace.rows.size() == 20);
}

TEST_CASE("teach_loop trace respects the ratio schedule") {
    const auto data = teacher_data(10, 11);
    RandomSource rng(47);
    const AttentionParams init = init_params(3, 2, 1, rng);

    TeachingConfig cfg;
    cfg.strategy = {SelectionKind::Random, 1.0};
    cfg.ratio = RatioSchedule::incremental(0.2, 0.8, 10);
    cfg.interval = IntervalSchedule::fixed(1);
    cfg.eta = 0.1;
    cfg.epsilon = 1e-12;
    cfg.max_iters = 10;
    auto [params, trace] = teach_loop(init, data, cfg);
    (void)params;
    REQUIRE(trace.rows.size() == 10);
    for (const TraceRow& row : trace.rows) {
        CHECK(row.ratio == doctest::Approx(ratio_at(cfg.ratio, row.epoch)));
        CHECK(row.n_selected ==
              static_cast<int>(std::ceil(row.ratio * static_cast<double>(data.size()))));
        CHECK(row.ratio > 0.0);
        CHECK(row.ratio <= 1.0);
        CHECK(row.residual_fro > 0.0);
    }
    // every selection event recorded with the right size, no duplicates
    for (const SelectionEvent& ev : trace.selections) {
        std::set<int> uniq(ev.ids.begin(), ev.ids.end());
        CHECK(uniq.size() == ev.ids.size());
    }
}

TEST_CASE("teach_loop reselects when the interval fires or the subset size changes") {
    const auto data = teacher_data(10, 12);
    RandomSource rng(48);
    const AttentionParams init = init_params(3, 2, 1, rng);

    TeachingConfig cfg;
    cfg.strategy = {SelectionKind::Hard, 1.0};
    cfg.ratio = RatioSchedule::fixed(0.5, 30);
    cfg.interval = IntervalSchedule::incremental(1, 2.0);
    cfg.eta = 0.05;
    cfg.epsilon = 1e-12;
    cfg.max_iters = 30;
    auto [params, trace] = teach_loop(init, data, cfg);
    (void)params;
    const std::set<int> fire{0, 1, 3, 7, 15};
    for (const TraceRow& row : trace.rows)
        CHECK(row.reselected == (fire.contains(row.epoch) ? 1 : 0));
}

TEST_CASE("teach_loop minibatches sweep the subset in order") {
    const auto data = teacher_data(9, 13);
    RandomSource rng(49);
    const AttentionParams init = init_params(3, 2, 1, rng);

    TeachingConfig cfg;
    cfg.strategy = {SelectionKind::Hard, 1.0};
    cfg.ratio = RatioSchedule::fixed(1.0, 4);
    cfg.interval = IntervalSchedule::fixed(1);
    cfg.eta = 0.2;
    cfg.epsilon = 1e-12;
    cfg.max_iters = 4;
    cfg.batch_size = 4;  // subsets of 9 -> 3 steps per epoch (4+4+1)
    auto [params, trace] = teach_loop(init, data, cfg);
    (void)params;
    REQUIRE(trace.rows.size() == 12);
    for (size_t i = 0; i < trace.rows.size(); ++i) {
        CHECK(trace.rows[i].iter == static_cast<long>(i));
        CHECK(trace.rows[i].epoch == static_cast<int>(i / 3));
    }

    // batch_size >= subset behaves exactly like full-subset steps
    TeachingConfig full = cfg;
    full.batch_size = 0;
    TeachingConfig big = cfg;
    big.batch_size = 100;
    const auto [p_full, t_full] = teach_loop(init, data, full);
    const auto [p_big, t_big] = teach_loop(init, data, big);
    CHECK(p_full.w_q == p_big.w_q);
    CHECK(t_full.rows.size() == t_big.rows.size());
}

TEST_CASE("presets match their paper endpoints") {
    const TeachingConfig llm = preset(PresetKind::LlmStyle, 100);
    CHECK(llm.strategy.kind == SelectionKind::Hard);
    CHECK(llm.warmup_epochs == 1);
    CHECK(ratio_at(llm.ratio, 0) == doctest::Approx(0.7));  // after the warmup epoch
    CHECK(ratio_at(llm.ratio, 50) == doctest::Approx(0.7));

    const TeachingConfig vit = preset(PresetKind::VitStyle, 100);
    CHECK(vit.strategy.kind == SelectionKind::Soft);
    CHECK(vit.interval.kind == IntervalSchedule::Kind::Incremental);
    CHECK(vit.ratio.horizon == 99);  // ramp ends on the last executed epoch
    CHECK(ratio_at(vit.ratio, 0) == 0.2);
    CHECK(ratio_at(vit.ratio, vit.ratio.horizon) == 0.8);
}

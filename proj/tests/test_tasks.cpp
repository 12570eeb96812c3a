#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "attent/antk.hpp"
#include "attent/tasks.hpp"
#include "attent/teaching.hpp"

using namespace attent;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/attent_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("gen_teacher is self-consistent and deterministic") {
    TaskSpec spec;
    spec.kind = TaskKind::TeacherNet;
    spec.n = 8; spec.s = 3; spec.d = 3; spec.p = 2; spec.v = 1;
    spec.seed = 21;
    auto [ds, teacher] = gen_teacher(spec);
    REQUIRE(ds.items.size() == 8);
    for (double s : residual_scores(teacher, ds.items)) CHECK(s == 0.0);

    auto [ds2, teacher2] = gen_teacher(spec);
    TempFile a("gen_a.jsonl"), b("gen_b.jsonl");
    save_jsonl(ds, a.path);
    save_jsonl(ds2, b.path);
    CHECK(slurp(a.path) == slurp(b.path));
    CHECK(teacher.w_q == teacher2.w_q);

    spec.noise_sd = 0.5;
    auto [noisy, teacher3] = gen_teacher(spec);
    (void)teacher3;
    bool any_residual = false;
    for (double s : residual_scores(teacher, noisy.items)) any_residual |= s > 0.0;
    CHECK(any_residual);

    spec.noise_sd = -1.0;
    CHECK_THROWS_AS(gen_teacher(spec), contract_error);
}

TEST_CASE("a student can relearn the noiseless teacher task") {
    TaskSpec spec;
    spec.kind = TaskKind::TeacherNet;
    spec.n = 64; spec.s = 3; spec.d = 2; spec.p = 2; spec.v = 1;
    spec.seed = 22;
    auto [ds, teacher] = gen_teacher(spec);
    (void)teacher;

    RandomSource rng(24);
    AttentionParams student = init_params(spec.d, spec.p, spec.v, rng);

    std::vector<Sequence> seqs;
    std::vector<double> derivs;
    for (const LabeledSequence& item : ds.items) {
        seqs.push_back(item.sequence);
        const Matrix out = forward_self(student, item.sequence);
        for (size_t k = 0; k < out.data.size(); ++k)
            derivs.push_back(out.data[k] - item.target.data[k]);
    }
    const LossReductionBound bound =
        loss_reduction_bound(antk_gram(student, seqs), derivs, 1.0);
    const double eta = bound.eta_max;

    double loss = batch_loss(student, ds.items);
    for (int step = 0; step < 5000 && loss > 1e-4; ++step) {
        auto [grad, l] = backward(student, ds.items);
        (void)l;
        student = sgd_step(student, grad, eta);
        loss = batch_loss(student, ds.items);
    }
    CHECK(loss <= 1e-4);
}

TEST_CASE("gen_analytic meanpool and linearmix targets") {
    TaskSpec spec;
    spec.kind = TaskKind::MeanPool;
    spec.n = 4; spec.s = 3; spec.d = 2; spec.p = 1; spec.v = 2;
    spec.seed = 24;
    const Dataset mp = gen_analytic(spec);
    for (const LabeledSequence& item : mp.items) {
        for (int c = 0; c < spec.d; ++c) {
            double mean = 0.0;
            for (int r = 0; r < spec.s; ++r) mean += item.sequence.features(r, c);
            mean /= spec.s;
            for (int r = 0; r < spec.s; ++r)
                CHECK(item.target(r, c) == doctest::Approx(mean).epsilon(1e-15));
        }
    }

    spec.v = 3;
    CHECK_THROWS_AS(gen_analytic(spec), contract_error);  // MeanPool needs v == d

    spec.kind = TaskKind::LinearMix;
    const Dataset lm = gen_analytic(spec);
    // all rows map through one shared matrix: recover it from item 0 when the
    // feature block is invertible, else just check row consistency
    for (const LabeledSequence& item : lm.items) {
        CHECK(item.target.rows == spec.s);
        CHECK(item.target.cols == spec.v);
        CHECK(all_finite(item.target));
    }
    // determinism
    const Dataset lm2 = gen_analytic(spec);
    TempFile a("lm_a.jsonl"), b("lm_b.jsonl");
    save_jsonl(lm, a.path);
    save_jsonl(lm2, b.path);
    CHECK(slurp(a.path) == slurp(b.path));

    TaskSpec bad = spec;
    bad.kind = TaskKind::TeacherNet;
    CHECK_THROWS_AS(gen_analytic(bad), contract_error);
}

TEST_CASE("linearmix rows satisfy a per-row matmul relation") {
    TaskSpec spec;
    spec.kind = TaskKind::LinearMix;
    spec.n = 3; spec.s = 4; spec.d = 2; spec.p = 1; spec.v = 1;
    spec.seed = 25;
    const Dataset lm = gen_analytic(spec);
    // Solve for the 2x1 mix from the first two rows of item 0, then check
    // every other row against it.
    const Matrix& f0 = lm.items[0].sequence.features;
    const Matrix& t0 = lm.items[0].target;
    const double det = f0(0, 0) * f0(1, 1) - f0(0, 1) * f0(1, 0);
    REQUIRE(std::abs(det) > 1e-9);
    const double a0 = (t0(0, 0) * f0(1, 1) - t0(1, 0) * f0(0, 1)) / det;
    const double a1 = (f0(0, 0) * t0(1, 0) - f0(1, 0) * t0(0, 0)) / det;
    for (const LabeledSequence& item : lm.items)
        for (int r = 0; r < spec.s; ++r) {
            const double ref = item.sequence.features(r, 0) * a0 +
                               item.sequence.features(r, 1) * a1;
            CHECK(item.target(r, 0) == doctest::Approx(ref).epsilon(1e-9));
        }
}

TEST_CASE("normalize_length truncates, pads, and is idempotent") {
    Matrix f(3, 2);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) f(r, c) = 10.0 * r + c;
    const Sequence seq{f};

    CHECK(normalize_length(seq, 3, 0.0).features == f);

    const Sequence cut = normalize_length(seq, 2, 0.0);
    CHECK(cut.features.rows == 2);
    CHECK(cut.features(1, 1) == 11.0);

    const Sequence padded = normalize_length(seq, 5, -1.0);
    CHECK(padded.features.rows == 5);
    CHECK(padded.features(2, 0) == 20.0);
    CHECK(padded.features(3, 0) == -1.0);
    CHECK(padded.features(4, 1) == -1.0);

    const Sequence twice = normalize_length(normalize_length(seq, 4, 0.0), 4, 0.0);
    CHECK(twice.features == normalize_length(seq, 4, 0.0).features);

    CHECK_THROWS_AS(normalize_length(seq, 0, 0.0), contract_error);
}

TEST_CASE("jsonl round trip is exact") {
    TaskSpec spec;
    spec.kind = TaskKind::TeacherNet;
    spec.n = 5; spec.s = 2; spec.d = 3; spec.p = 2; spec.v = 2;
    spec.seed = 26;
    auto [ds, teacher] = gen_teacher(spec);
    (void)teacher;

    TempFile f("roundtrip.jsonl");
    save_jsonl(ds, f.path);
    const Dataset back = load_jsonl(f.path);
    REQUIRE(back.items.size() == ds.items.size());
    for (size_t i = 0; i < ds.items.size(); ++i) {
        CHECK(back.items[i].sequence.features == ds.items[i].sequence.features);
        CHECK(back.items[i].target == ds.items[i].target);
    }
    CHECK(back.meta.generator == "teacher");
    CHECK(back.meta.seed == 26);

    // byte-level: save(load(save(ds))) reproduces the file
    TempFile g("roundtrip2.jsonl");
    save_jsonl(back, g.path);
    CHECK(slurp(f.path) == slurp(g.path));
}

TEST_CASE("empty-items dataset round-trips") {
    Dataset ds;
    ds.meta = {0, 0, 0, 0, "teacher", 1, 0.0};
    TempFile f("empty.jsonl");
    save_jsonl(ds, f.path);
    const Dataset back = load_jsonl(f.path);
    CHECK(back.items.empty());
    CHECK(back.meta.generator == "teacher");
}

TEST_CASE("malformed records are reported with their line number") {
    TempFile f("bad.jsonl");
    {
        std::ofstream out(f.path);
        out << R"({"meta": {"n": 1, "s": 1, "d": 1, "v": 1, "generator": "teacher", "seed": 0, "noise_sd": 0.0}})"
            << "\n";
        out << R"({"id": 0, "features": [[1.0]]})" << "\n";  // missing target
    }
    try {
        load_jsonl(f.path);
        FAIL("expected io_error");
    } catch (const io_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("target") != std::string::npos);
    }

    CHECK_THROWS_AS(load_jsonl("/nonexistent/path.jsonl"), io_error);
}

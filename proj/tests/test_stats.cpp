#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <sqhhg/stats.hpp>

using namespace sqhhg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<ShotRecord> records_from(const std::vector<double>& h_ev, double ev_per_order = 0.8)
{
    std::vector<ShotRecord> out(h_ev.size());
    for (std::size_t i = 0; i < h_ev.size(); ++i) {
        out[i].shot_index = i;
        out[i].sample = {1000.0, 0.0};
        out[i].cutoff.h_ev = h_ev[i];
        out[i].cutoff.h_ho = h_ev[i] / ev_per_order;
    }
    return out;
}

std::vector<double> normal_values(std::size_t n, double mean, double sd, std::uint64_t seed)
{
    RandomStream rng({seed, 0});
    std::vector<double> v(n);
    for (auto& x : v) x = mean + sd * rng.next_normal();
    return v;
}

}  // namespace

TEST_CASE("identical cutoffs give zero variance")
{
    const auto recs = records_from(std::vector<double>(50, 90.0));
    const auto st = cutoff_statistics(recs);
    CHECK(st.var_h() == 0.0);
    CHECK(st.ci95_var().lo == 0.0);
    CHECK(st.ci95_var().hi == 0.0);
    CHECK(st.mean_h_ev == 90.0);
    CHECK_THAT(st.mean_h_ho(), WithinRel(90.0 / 0.8, 1e-12));
}

TEST_CASE("normal sample statistics")
{
    const auto st = cutoff_statistics(records_from(normal_values(1000, 100.0, 2.0, 11)));
    CHECK(std::abs(st.mean_h_ev - 100.0) < 3.0 * 2.0 / std::sqrt(1000.0));
    CHECK_THAT(st.var_h(), WithinRel(4.0, 0.15));
    CHECK(st.ci95_var().contains(st.var_h()));
    // Chi-square interval half-width for n = 1000 is about 4 * 1.96 * sqrt(2/999).
    CHECK_THAT(st.ci95_var().half_width(), WithinRel(4.0 * 1.96 * std::sqrt(2.0 / 999.0), 0.25));
    CHECK(st.ci95_mean_ev.contains(st.mean_h_ev));
}

TEST_CASE("too few shots for a variance")
{
    const auto st = cutoff_statistics(records_from({1.0, 2.0, 3.0, 4.0, 5.0}));
    CHECK(!st.var_h_ev2.has_value());
    CHECK_THROWS_MATCHES(st.var_h(), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::insufficient_data;
                         }));
}

TEST_CASE("flagged shots are excluded")
{
    auto recs = records_from(normal_values(40, 100.0, 1.0, 3));
    recs[3].cutoff.flags.noisy = true;
    recs[7].failed = true;
    const auto st = cutoff_statistics(recs);
    CHECK(st.n_valid == 38);
    CHECK(st.n_flagged == 2);
    CHECK_THAT(flagged_fraction(recs), WithinAbs(0.05, 1e-15));
}

TEST_CASE("bootstrap is reproducible")
{
    const auto recs = records_from(normal_values(100, 50.0, 3.0, 5));
    const auto a = cutoff_statistics(recs, {500, 9});
    const auto b = cutoff_statistics(recs, {500, 9});
    CHECK(a.ci95_var().lo == b.ci95_var().lo);
    CHECK(a.ci95_var().hi == b.ci95_var().hi);
}

TEST_CASE("witness ratio")
{
    const auto recs = records_from(normal_values(300, 100.0, 1.0, 21));
    const auto st = cutoff_statistics(recs);
    const auto same = witness_ratio(st, st);
    CHECK(same.ratio == 1.0);
    CHECK(same.ci95.contains(1.0));

    const auto wide = cutoff_statistics(records_from(normal_values(300, 100.0, 3.0, 22)));
    const auto w = witness_ratio(wide, st);
    CHECK_THAT(w.ratio, WithinRel(9.0, 0.25));
    CHECK(w.ci95.lo > 1.0);

    const auto flat = cutoff_statistics(records_from(std::vector<double>(30, 70.0)));
    CHECK_THROWS_MATCHES(witness_ratio(st, flat), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::undefined_ratio;
                         }));
}

TEST_CASE("rank correlation")
{
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> up{2, 4, 8, 16, 32};
    const std::vector<double> down{5, 3, 2, 1, 0};
    CHECK_THAT(spearman(a, up), WithinAbs(1.0, 1e-15));
    CHECK_THAT(spearman(a, down), WithinAbs(-1.0, 1e-15));
    const std::vector<double> ties{1, 1, 2, 2, 3};
    // Average ranks 1.5 1.5 3.5 3.5 5 against 1..5.
    CHECK_THAT(spearman(a, ties), WithinAbs(9.0 / std::sqrt(90.0), 1e-12));
    CHECK_THROWS_AS(spearman(a, std::vector<double>{1, 2}), Error);
}

TEST_CASE("rate-weighted cutoff")
{
    const auto adk = AdkParams::make(0.5792);
    auto recs = records_from({80.0, 90.0, 100.0});
    const auto flat = rate_weighted_cutoff(recs, 1e-4, adk, {200, 1});
    CHECK_THAT(flat.h_ev, WithinRel(90.0, 1e-12));
    CHECK_THAT(flat.h_ho, WithinRel(90.0 / 0.8, 1e-12));

    // Stronger field on the last shot dominates the weights.
    recs[2].sample = {1100.0, 0.0};
    const double e_vac = 5e-5;
    const double w0 = 1.0;
    const double w2 = std::exp(-adk.b_au / (e_vac * 1100.0) + adk.b_au / (e_vac * 1000.0));
    const auto tilted = rate_weighted_cutoff(recs, e_vac, adk, {200, 1});
    CHECK_THAT(tilted.h_ev, WithinRel((80.0 * w0 + 90.0 * w0 + 100.0 * w2) / (2 * w0 + w2), 1e-12));
}

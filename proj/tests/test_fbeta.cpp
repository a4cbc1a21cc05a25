#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracle.hpp"

using namespace mmdlab;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

const FBetaModel& half_model() {
    static const FBetaModel m(plan_sequences(q(1, 2), 2, q(1, 2)));
    return m;
}

struct Frozen {
    Rational beta;
    std::size_t k;
    const char* ell;
    const char* i;
    const char* eps;
};

// Values produced by the linear-scan oracle over odd ell (exact rationals).
const Frozen frozen[] = {
    {q(0), 0, "5", "1", "1/10"},
    {q(0), 1, "7", "1", "1/140"},
    {q(3, 10), 0, "5", "1", "1/10"},
    {q(3, 10), 1, "25", "6", "1/500"},
    {q(1, 2), 0, "29", "7", "1/58"},
    {q(1, 2), 1, "1853", "463", "1/214948"},
    {q(7, 10), 0, "505", "126", "1/1010"},
    {q(7, 10), 1, "5240263985", "1310065996", "1/10585333249700"},
};

} // namespace

// ---- plan_sequences --------------------------------------------------------------

TEST(FBetaPlan, FrozenOracleValues) {
    for (const auto& f : frozen) {
        FBetaPlan plan = plan_sequences(f.beta, 2, q(1, 2));
        const auto& L = plan.level[f.k];
        EXPECT_EQ(L.ell, Integer(f.ell)) << to_fraction(f.beta) << " level " << f.k;
        EXPECT_EQ(L.i, Integer(f.i)) << to_fraction(f.beta) << " level " << f.k;
        EXPECT_EQ(L.eps, parse_rational(f.eps)) << to_fraction(f.beta) << " level " << f.k;
    }
}

TEST(FBetaPlan, AgreesWithLinearScanWhereTheScanIsCheap) {
    for (Rational beta : {q(0), q(1, 10), q(1, 4), q(3, 10), q(1, 3), q(1, 2), q(3, 5)}) {
        FBetaPlan plan = plan_sequences(beta, 2, q(1, 2));
        Integer prev = 1;
        for (const auto& L : plan.level) {
            if (L.ell > 200000) break;
            auto s = oracle::scan_level(L.gamma, beta.get_num().get_ui(), beta.get_den().get_ui(), prev);
            EXPECT_EQ(L.ell, s.ell) << to_fraction(beta);
            EXPECT_EQ(L.i, s.i) << to_fraction(beta);
            prev = L.ell;
        }
    }
}

TEST(FBetaPlan, HalfLevelZero) {
    const auto& L = half_model().level(0);
    EXPECT_EQ(L.gamma, q(1, 2));
    EXPECT_EQ(L.ell, 29);
    EXPECT_EQ(L.i, 7);
    EXPECT_EQ(L.eps, q(1, 58));
    EXPECT_FALSE(branch_layout_fits(27, q(1, 2), q(1, 2)));
    EXPECT_TRUE(branch_layout_fits(29, q(1, 2), q(1, 2)));
}

TEST(FBetaPlan, HalfLevelOne) {
    const auto& L = half_model().level(1);
    EXPECT_EQ(L.a_even, q(1, 58));
    EXPECT_EQ(L.a_odd, q(1, 116));
    EXPECT_EQ(L.gamma, q(1, 116));
    EXPECT_EQ(L.ell, 1853);
    EXPECT_FALSE(branch_layout_fits(1851, L.gamma, q(1, 2)));
}

TEST(FBetaPlan, BetaZeroHasOneSelectedPair) {
    FBetaPlan plan = plan_sequences(q(0), 4, q(1, 2));
    EXPECT_EQ(plan.level[0].ell, 5);
    for (const auto& L : plan.level) EXPECT_EQ(L.i, 1);
}

TEST(FBetaPlan, SequenceInvariants) {
    for (Rational beta : {q(0), q(3, 10), q(1, 2), q(7, 10)}) {
        FBetaPlan plan = plan_sequences(beta, 2, q(1, 2));
        Rational prev_even = 1;
        Integer prev_ell = 1;
        for (const auto& L : plan.level) {
            EXPECT_EQ(L.a_even, prev_even);
            EXPECT_LT(L.a_odd, L.a_even);
            EXPECT_GT(L.a_odd, L.eps);
            EXPECT_EQ(L.eps, L.gamma / Rational(L.ell));
            EXPECT_TRUE(mpz_odd_p(L.ell.get_mpz_t()));
            EXPECT_GT(L.ell, prev_ell);
            EXPECT_LE(4 * L.i + 1, L.ell);
            EXPECT_EQ(L.i, floor_pow(Rational(L.ell) / L.gamma, beta));
            EXPECT_EQ(L.b, (L.eps + L.a_odd) / 2);
            prev_even = L.eps;
            prev_ell = L.ell;
        }
    }
}

TEST(FBetaPlan, Errors) {
    EXPECT_THROW(plan_sequences(q(1), 1, q(1, 2)), ContractError);
    EXPECT_THROW(plan_sequences(q(-1, 2), 1, q(1, 2)), ContractError);
    EXPECT_THROW(plan_sequences(q(3, 2), 1, q(1, 2)), ContractError);
    EXPECT_THROW(plan_sequences(q(1, 2), 0, q(1, 2)), ContractError);
    EXPECT_THROW(plan_sequences(q(1, 2), 1, q(1)), ContractError);
    EXPECT_THROW(plan_sequences(q(1, 2), 1, q(0)), ContractError);
    EXPECT_THROW(plan_sequences(q(1, 2), 1, q(1, 2), FBetaVariant::full), ContractError);
    // seed so small that a_2 cannot lie below a_1
    EXPECT_THROW(plan_sequences(q(0), 1, q(1, 100)), ContractError);
}

TEST(FBetaPlan, TamperedPlanIsRejected) {
    FBetaPlan plan = plan_sequences(q(1, 2), 2, q(1, 2));
    FBetaPlan bad = plan;
    bad.level[0].ell = 27;
    EXPECT_THROW(validate_plan(bad), ContractError);
    bad = plan;
    bad.level[1].i += 1;
    EXPECT_THROW(validate_plan(bad), ContractError);
    bad = plan;
    bad.level[0].b += q(1, 1000);
    EXPECT_THROW(validate_plan(bad), ContractError);
    bad = plan;
    bad.level[1].a_even = q(1, 57);
    EXPECT_THROW(validate_plan(bad), ContractError);
    EXPECT_THROW(FBetaModel{bad}, ContractError);
}

TEST(FBetaPlan, FullVariantAtBetaOne) {
    FBetaPlan plan = plan_sequences(q(1), 2, q(1, 2), FBetaVariant::full);
    Integer prev = 1;
    for (std::size_t k = 0; k < plan.levels; ++k) {
        const auto& L = plan.level[k];
        EXPECT_EQ(L.i, L.ell);
        EXPECT_GT(L.ell, prev);
        EXPECT_GE(Rational(L.ell), 1 / Rational(pow(L.gamma, static_cast<unsigned long>(k + 1))));
        prev = L.ell;
    }
    for (std::size_t n = 0; n < 4; ++n)
        EXPECT_EQ(predicted_count(plan, 0, n), pow(plan.level[0].ell, static_cast<unsigned long>(n)));
}

// ---- predicted_count --------------------------------------------------------------

TEST(FBetaPredicted, Examples) {
    const auto& plan = half_model().plan();
    EXPECT_EQ(predicted_count(plan, 0, 3), 343);
    EXPECT_EQ(predicted_count(plan, 0, 0), 1);
    EXPECT_EQ(predicted_count(plan, 1, 0), 1);
    EXPECT_EQ(predicted_count(plan, 1, 1), floor_pow(Rational(214948), q(1, 2)));
    EXPECT_THROW(predicted_count(plan, 2, 1), DomainError);
}

// ---- model -----------------------------------------------------------------------

TEST(FBetaModel, EndpointsFixed) {
    for (Rational beta : {q(0), q(3, 10), q(1, 2), q(7, 10)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        EXPECT_EQ(m.eval(0), 0);
        EXPECT_EQ(m.eval(1), 1);
        if (m.map()) {
            EXPECT_EQ(m.map()->eval(0), 0);
            EXPECT_EQ(m.map()->eval(1), 1);
        }
    }
    FBetaModel v(plan_sequences(q(1), 2, q(1, 2), FBetaVariant::full));
    EXPECT_EQ(v.eval(0), 0);
    EXPECT_EQ(v.eval(1), 1);
}

TEST(FBetaModel, GapAttractor) {
    const auto& m = half_model();
    const auto& L = m.level(0);
    EXPECT_EQ(m.eval(L.b), L.b);
    Rational quarter = L.b + (L.a_odd - L.b) / 4;
    Rational y = m.eval(quarter);
    EXPECT_LT(y, quarter);
    EXPECT_GT(y, L.b);
    Rational left = L.eps + (L.b - L.eps) / 4;
    EXPECT_GT(m.eval(left), left);
    EXPECT_LT(m.eval(left), L.b);
}

TEST(FBetaModel, GapConvergenceOverTwoHundredIterates) {
    const auto& m = half_model();
    PwaMap map = *m.map();
    const auto& L = m.level(0);
    Rational x = L.eps + L.gap().length() / 4;
    Rational dist = abs(x - L.b);
    for (int t = 0; t < 200; ++t) {
        Rational next = map.eval(x);
        Rational d = abs(next - L.b);
        ASSERT_LT(d, dist) << "iterate " << t;
        ASSERT_LT(next, L.b);
        ASSERT_GT(next, x);
        x = next;
        dist = d;
    }
}

TEST(FBetaModel, IncreasingBranchesGapThreeEps) {
    const auto& m = half_model();
    const auto& L = m.level(0);
    auto table = m.branch_table(0);
    std::vector<Interval> inc;
    for (const auto& e : table)
        if (e.increasing) inc.push_back(e.domain);
    ASSERT_EQ(inc.size(), 8u);
    for (std::size_t a = 0; a + 1 < inc.size(); ++a) EXPECT_EQ(inc[a + 1].lo - inc[a].hi, 3 * L.eps);
    for (std::size_t a = 0; a < inc.size(); ++a)
        for (std::size_t b = a + 1; b < inc.size(); ++b) EXPECT_GT(interval_gap(inc[a], inc[b]), L.eps);
    EXPECT_EQ(table.size(), 15u);
}

TEST(FBetaModel, BranchesAreOntoJk) {
    for (Rational beta : {q(0), q(1, 2)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& L = m.level(k);
            for (const auto& e : m.branch_table(k)) {
                Rational lo = m.map()->eval(e.domain.lo), hi = m.map()->eval(e.domain.hi);
                EXPECT_EQ(e.domain.length(), L.eps);
                if (e.increasing) {
                    EXPECT_EQ(lo, L.a_odd);
                    EXPECT_EQ(hi, L.a_even);
                } else {
                    EXPECT_EQ(lo, L.a_even);
                    EXPECT_EQ(hi, L.a_odd);
                }
                EXPECT_EQ(abs(m.map()->slope(m.map()->piece_of(e.domain.midpoint()))), Rational(L.ell));
            }
        }
    }
}

TEST(FBetaModel, PieceKindsFollowTheLayout) {
    const auto& m = half_model();
    EXPECT_EQ(m.piece_kind(0, 1), PieceKind::up);
    EXPECT_EQ(m.piece_kind(0, 2), PieceKind::top_connector);
    EXPECT_EQ(m.piece_kind(0, 3), PieceKind::down);
    EXPECT_EQ(m.piece_kind(0, 4), PieceKind::bottom_connector);
    EXPECT_EQ(m.piece_kind(0, 29), PieceKind::up); // 1 + 4 * 7
    EXPECT_THROW(m.piece_kind(0, 30), DomainError);
    FBetaModel z(plan_sequences(q(0), 1, q(1, 2)));
    EXPECT_EQ(z.piece_kind(0, 5), PieceKind::up);
    FBetaModel t(plan_sequences(q(3, 10), 2, q(1, 2)));
    // ell_1 = 25, i_1 = 6: 4 i + 1 = 25 fills the level exactly
    EXPECT_EQ(t.piece_kind(1, 25), PieceKind::up);
}

TEST(FBetaModel, TrailingBlockIsOneTent) {
    // beta = 1/10 leaves subintervals past 1 + 4 i_k on some level
    bool seen = false;
    for (Rational beta : {q(1, 10), q(1, 5), q(1, 4), q(2, 5)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& L = m.level(k);
            if (4 * L.i + 1 == L.ell) continue;
            seen = true;
            Rational start = L.c(4 * L.i + 1);
            EXPECT_EQ(m.eval(start), L.a_even);
            EXPECT_EQ(m.eval(L.a_even), L.a_even);
            EXPECT_EQ(m.eval((start + L.a_even) / 2), m.plan().top_peak(k));
        }
    }
    EXPECT_TRUE(seen);
}

TEST(FBetaModel, ClosedFormMatchesNodeList) {
    std::mt19937_64 rng(99);
    for (Rational beta : {q(0), q(3, 10), q(1, 2)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        ASSERT_TRUE(m.map().has_value());
        auto ns = m.nodes();
        for (int t = 0; t < 2000; ++t) {
            Rational x = oracle::random_fraction(rng, 1 << 20);
            ASSERT_EQ(m.eval(x), oracle::eval_nodes(ns, x)) << to_fraction(x);
        }
        for (const auto& n : ns) ASSERT_EQ(m.eval(n.x), n.y);
    }
}

TEST(FBetaModel, NodeBudgetOmitsTheMap) {
    FBetaModel big(plan_sequences(q(7, 10), 2, q(1, 2)));
    EXPECT_FALSE(big.map().has_value());
    EXPECT_GT(big.node_estimate(), Integer(default_node_budget));
    FBetaModel small(plan_sequences(q(1, 2), 2, q(1, 2)), 10);
    EXPECT_FALSE(small.map().has_value());
    EXPECT_EQ(small.eval(q(1, 3)), half_model().eval(q(1, 3)));
}

// ---- invariants ------------------------------------------------------------------

TEST(FBetaProperty, Continuity) {
    for (Rational beta : {q(0), q(1, 10), q(3, 10), q(1, 2)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        auto ns = m.nodes(); // throws on a jump
        for (std::size_t i = 0; i + 1 < ns.size(); ++i) ASSERT_LT(ns[i].x, ns[i + 1].x);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& L = m.level(k);
            Integer pieces = 4 * L.i + 1;
            for (Integer j = 1; j < pieces; ++j)
                ASSERT_EQ(m.piece_value(k, j, 1), m.piece_value(k, j + 1, 0));
        }
    }
}

TEST(FBetaProperty, LevelInvariance) {
    for (Rational beta : {q(0), q(3, 10), q(1, 2)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        const auto& plan = m.plan();
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& L = plan.level[k];
            Rational upper = k == 0 ? Rational(1) : plan.level[k - 1].a_odd;
            Rational step = L.gamma / 997;
            for (int t = 0; t <= 997; ++t) {
                Rational x = L.a_odd + step * t;
                Rational y = m.eval(x);
                ASSERT_GE(y, L.eps);
                ASSERT_LE(y, upper);
            }
            Interval g = L.gap();
            for (int t = 0; t <= 64; ++t) {
                Rational x = g.lo + g.length() * q(t, 64);
                for (int s = 0; s < 40; ++s) {
                    x = m.eval(x);
                    ASSERT_TRUE(g.contains(x));
                }
            }
        }
        Rational tail = plan.tail_top() / 2;
        for (int s = 0; s < 100; ++s) ASSERT_EQ(m.eval(tail), tail);
    }
}

TEST(FBetaProperty, CylinderWidthIsGammaTimesEllPower) {
    for (Rational beta : {q(0), q(3, 10), q(1, 2)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& L = m.level(k);
            auto view = m.markov_view(k);
            for (std::size_t n = 1; n <= 4; ++n) {
                Rational w = L.gamma / Rational(pow(L.ell, static_cast<unsigned long>(n)));
                ASSERT_EQ(view.cylinder_width(n), w);
                Integer cylinders = pow(view.count, static_cast<unsigned long>(n));
                if (cylinders > 5000) continue;
                for (const auto& c : enumerate_cylinders(view, n)) ASSERT_EQ(c.length(), w);
            }
        }
    }
}

TEST(FBetaProperty, SeparationCertificateDirect) {
    // beta = 0: two increasing branches per level, every depth up to 6 checked pairwise
    FBetaModel z(plan_sequences(q(0), 2, q(1, 2)));
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t n = 1; n <= 6; ++n) {
            auto c = count_cylinders(z.markov_view(k), n, z.level(k).eps, fbeta_dynamics(z));
            ASSERT_TRUE(c.record.certified);
            ASSERT_EQ(c.record.count, Integer(1ul << n));
            ASSERT_TRUE(oracle::pairwise_separated(*z.map(), c.representatives, n, z.level(k).eps));
        }
    const auto& h = half_model();
    for (std::size_t n = 1; n <= 3; ++n) {
        auto c = count_cylinders(h.markov_view(0), n, h.level(0).eps, fbeta_dynamics(h));
        ASSERT_TRUE(c.record.certified);
        ASSERT_TRUE(oracle::pairwise_separated(*h.map(), c.representatives, n, h.level(0).eps));
    }
}

TEST(FBetaProperty, SeparationCertificateDepthSix) {
    const auto& h = half_model();
    for (std::size_t n = 4; n <= 6; ++n) {
        auto c = count_cylinders(h.markov_view(0), n, h.level(0).eps, fbeta_dynamics(h));
        ASSERT_TRUE(c.record.certified) << c.note;
        ASSERT_EQ(c.record.count, Integer(pow(Integer(8), static_cast<unsigned long>(n))));
    }
}

TEST(FBetaProperty, RatioConvergence) {
    for (Rational beta : {q(0), q(3, 10), q(1, 2), q(7, 10)}) {
        FBetaPlan plan = plan_sequences(beta, 2, q(1, 2));
        for (const auto& L : plan.level) {
            double le = std::fabs(log_of(L.eps));
            double delta = 1 / le + std::fabs(log_of(L.gamma)) / le;
            double r = log_of(Rational(L.i + 1)) / le;
            double b = beta.get_d();
            EXPECT_GE(r, b - delta) << to_fraction(beta);
            EXPECT_LE(r, b + delta) << to_fraction(beta);
        }
    }
    FBetaPlan full = plan_sequences(q(1), 2, q(1, 2), FBetaVariant::full);
    for (const auto& L : full.level) {
        double le = std::fabs(log_of(L.eps));
        EXPECT_NEAR(log_of(Rational(L.ell)) / le, 1 - std::fabs(log_of(L.gamma)) / le, 1e-12);
    }
}

// ---- verify_model ----------------------------------------------------------------

TEST(FBetaVerify, HalfModel) {
    auto rep = verify_model(half_model());
    EXPECT_TRUE(rep.ok) << rep.failure;
    bool found = false;
    for (const auto& s : rep.passed)
        if (s.find("level 0: cylinder count 64 >= predicted 49") != std::string::npos) found = true;
    EXPECT_TRUE(found);
}

TEST(FBetaVerify, AllBetas) {
    for (Rational beta : {q(0), q(3, 10), q(7, 10)}) {
        FBetaModel m(plan_sequences(beta, 2, q(1, 2)));
        auto rep = verify_model(m);
        EXPECT_TRUE(rep.ok) << to_fraction(beta) << ": " << rep.failure;
    }
    FBetaModel v(plan_sequences(q(1), 2, q(1, 2), FBetaVariant::full));
    auto rep = verify_model(v);
    EXPECT_TRUE(rep.ok) << rep.failure;
}

// ---- serialization ---------------------------------------------------------------

TEST(FBetaText, PlanRoundTrip) {
    for (Rational beta : {q(0), q(1, 2), q(7, 10)}) {
        FBetaPlan plan = plan_sequences(beta, 2, q(1, 2));
        std::stringstream ss;
        write_plan(ss, plan);
        EXPECT_TRUE(read_plan(ss) == plan);
    }
    FBetaPlan full = plan_sequences(q(1), 2, q(1, 2), FBetaVariant::full);
    std::stringstream ss;
    write_plan(ss, full);
    EXPECT_TRUE(read_plan(ss) == full);
}

TEST(FBetaText, PlanFormat) {
    std::stringstream ss;
    write_plan(ss, half_model().plan());
    std::string text = ss.str();
    EXPECT_EQ(text.rfind("mmdlab-fbeta-plan 1\n", 0), 0u);
    EXPECT_NE(text.find("beta = 1/2\n"), std::string::npos);
    EXPECT_NE(text.find("K = 2\n"), std::string::npos);
    EXPECT_NE(text.find("level.0 = 1/1 1/2 29 7 1/58 15/58\n"), std::string::npos);
}

TEST(FBetaText, ModelRoundTrip) {
    std::stringstream ss;
    write_model(ss, half_model());
    FBetaModel back = read_model(ss);
    EXPECT_TRUE(back.plan() == half_model().plan());
    ASSERT_TRUE(back.map().has_value());
    EXPECT_TRUE(*back.map() == *half_model().map());

    FBetaModel big(plan_sequences(q(7, 10), 2, q(1, 2)));
    std::stringstream bs;
    write_model(bs, big);
    EXPECT_NE(bs.str().find("map = omitted"), std::string::npos);
    EXPECT_TRUE(read_model(bs).plan() == big.plan());
}

TEST(FBetaText, Rejections) {
    std::stringstream bad_header("mmdlab-fbeta-plan 9\nbeta = 1/2\n");
    EXPECT_THROW(read_plan(bad_header), ParseError);
    std::stringstream missing("mmdlab-fbeta-plan 1\nbeta = 1/2\nK = 2\n");
    EXPECT_THROW(read_plan(missing), ParseError);

    std::stringstream ss;
    write_plan(ss, half_model().plan());
    std::string text = ss.str();
    auto pos = text.find(" 29 7 ");
    std::string tampered = text.substr(0, pos) + " 31 7 " + text.substr(pos + 6);
    std::stringstream ts(tampered);
    EXPECT_THROW(read_plan(ts), ContractError);

    std::stringstream decimal("mmdlab-fbeta-plan 1\nbeta = 0.5\nK = 1\nseed_a1 = 1/2\nvariant = standard\n");
    EXPECT_THROW(read_plan(decimal), ParseError);
}

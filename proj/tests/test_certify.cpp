#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "houli/certify.hpp"
#include "houli/weighted.hpp"

namespace {

using houli::CertifyOptions;
using houli::FMatrix;
using houli::from_ratio;
using houli::Interval;

TEST(Certify, MatrixEntriesMatchFrozenValues) {
  const FMatrix m = houli::build_F_matrix(6, from_ratio(84, 100));
  ASSERT_EQ(m.N, 6);
  ASSERT_EQ(m.dim(), 12);

  EXPECT_NEAR(m.at(0, 0).mid(), 1.84, 1e-13);   // first diagonal of the a-block
  EXPECT_NEAR(m.at(6, 6).mid(), 1.34, 1e-13);   // first diagonal of the c-block
  EXPECT_NEAR(m.at(0, 6).mid(), -0.5, 1e-15);   // a1-c1 coupling (half of the cross term)
  EXPECT_LT(m.at(0, 0).width(), 1e-14);

  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) {
      ASSERT_EQ(m.at(i, j).lo, m.at(j, i).lo);
      ASSERT_EQ(m.at(i, j).hi, m.at(j, i).hi);
      ASSERT_LE(m.at(i, j).lo, m.at(i, j).hi);
    }
}

TEST(Certify, ParallelBuildIsBitIdentical) {
  const FMatrix s = houli::build_F_matrix(40, from_ratio(84, 100), 1);
  const FMatrix p = houli::build_F_matrix(40, from_ratio(84, 100), 3);
  ASSERT_EQ(s.e.size(), p.e.size());
  for (size_t i = 0; i < s.e.size(); ++i) {
    ASSERT_EQ(s.e[i].lo, p.e[i].lo);
    ASSERT_EQ(s.e[i].hi, p.e[i].hi);
  }
}

TEST(Certify, QuadFormMatchesScalarQuadraticForm) {
  const int N = 12;
  const FMatrix m = houli::build_F_matrix(N, from_ratio(84, 100));
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(2 * N);
    for (double& x : v) x = u(rng);
    std::vector<double> a(v.begin(), v.begin() + N);
    std::vector<double> c(v.begin() + N, v.end());
    const double f = houli::F_quadratic(a, c, 0.84);
    const Interval q = houli::quad_form(m, v);
    ASSERT_LE(q.lo - 1e-9, f);
    ASSERT_GE(q.hi + 1e-9, f);
    ASSERT_LT(q.width(), 1e-10);
  }
  EXPECT_THROW(houli::quad_form(m, std::vector<double>(2 * N - 1)), std::invalid_argument);
}

TEST(Certify, EigenvalueCertifierHandlesHandBuiltMatrices) {
  FMatrix m;
  m.N = 2;
  m.e.assign(16, Interval(0.0));
  for (int i = 0; i < 4; ++i) m.at(i, i) = Interval(2.0);

  const auto ok = houli::certify_min_eigenvalue(m, 1.0, 1e-3, 1);
  EXPECT_TRUE(ok.certified);
  EXPECT_NEAR(ok.min_D, 1.0, 1e-12);
  EXPECT_NEAR(ok.lambda_min_lower, 0.999, 1e-12);
  EXPECT_LT(ok.residual_max, 1e-12);

  const auto shifted_too_far = houli::certify_min_eigenvalue(m, 3.0, 1e-3, 1);
  EXPECT_FALSE(shifted_too_far.certified);
  EXPECT_NE(shifted_too_far.failure.find("not positive"), std::string::npos);

  const auto bad_margin = houli::certify_min_eigenvalue(m, 1.0, 0.0, 1);
  EXPECT_FALSE(bad_margin.certified);
}

TEST(Certify, DefaultShiftTracksMatrixSize) {
  for (int n : {100, 200, 640}) {
    const double m = 1e-3;
    EXPECT_EQ(houli::default_sigma(n, m), 2.0 / n + m + 1e-15);
  }
}

TEST(Certify, TailBoundsVerifyFrozenConstants) {
  const auto t = houli::tail_bound_check(200, from_ratio(84, 100));
  EXPECT_TRUE(t.certified) << t.failure;
  EXPECT_TRUE(t.neg_two_over_N.contains(-0.01));
  EXPECT_LT(t.neg_two_over_N.width(), 1e-15);
  EXPECT_TRUE(t.delta_minus_3_over_N.contains(0.825));
  EXPECT_GE(t.tail_a_margin.lo, 0.0);
  EXPECT_GE(t.tail_c_margin.lo, 0.0);

  const auto t400 = houli::tail_bound_check(400, from_ratio(84, 100));
  EXPECT_TRUE(t400.certified) << t400.failure;
  EXPECT_TRUE(t400.neg_two_over_N.contains(-0.005));
}

// The default-size certificate is an honest negative: the smallest eigenvalue
// of the 200-mode truncation sits near 3.4e-3, below the default shift.
TEST(Certify, DefaultSizeCertificateReportsHonestFailure) {
  CertifyOptions opt;
  const auto c = houli::full_certificate(opt);
  EXPECT_EQ(c.N, 200);
  EXPECT_FALSE(c.certified);
  EXPECT_FALSE(c.eig.certified);
  EXPECT_TRUE(c.integrity_ok);
  EXPECT_FALSE(c.failure.empty());
  EXPECT_EQ(c.matrix_sha256.size(), 64u);

  // min_D approximates lambda_min - sigma; recover the frozen eigenvalue.
  const double approx_lambda = c.eig.min_D + c.sigma;
  EXPECT_GT(approx_lambda, 0.0030);
  EXPECT_LT(approx_lambda, 0.0040);
}

TEST(Certify, IntermediateSizesStillFallShortOfDefaultShift) {
  for (int n : {300, 400}) {
    CertifyOptions opt;
    opt.N = n;
    const auto c = houli::full_certificate(opt);
    EXPECT_FALSE(c.certified) << "N = " << n;
    EXPECT_FALSE(c.eig.certified);
  }
}

TEST(Certify, LargeTruncationCertifiesWithReducedMargin) {
  CertifyOptions opt;
  opt.N = 640;
  opt.margin = 1e-4;
  const auto c = houli::full_certificate(opt);
  EXPECT_TRUE(c.certified) << c.failure;
  EXPECT_TRUE(c.eig.certified);
  EXPECT_TRUE(c.tail.certified);
  EXPECT_TRUE(c.gap_ok);
  EXPECT_TRUE(c.integrity_ok);
  EXPECT_GT(c.eig.lambda_min_lower, 0.00312);
  EXPECT_GT(c.eig.min_D, 0.0);
  EXPECT_LE(c.eig.one_norm_hi, opt.margin);

  const std::string text = houli::certificate_text(c);
  EXPECT_NE(text.find("[matrix]"), std::string::npos);
  EXPECT_NE(text.find("[eigenvalue]"), std::string::npos);
  EXPECT_NE(text.find("[tail]"), std::string::npos);
  EXPECT_NE(text.find("verdict = certified"), std::string::npos);
  EXPECT_NE(text.find(c.matrix_sha256), std::string::npos);
}

TEST(Certify, TamperHookBreaksIntegrity) {
  CertifyOptions opt;
  opt.N = 24;
  opt.tamper = true;
  const auto c = houli::full_certificate(opt);
  EXPECT_FALSE(c.integrity_ok);
  EXPECT_FALSE(c.certified);
  EXPECT_NE(c.failure.find("hash mismatch"), std::string::npos);
  EXPECT_NE(houli::certificate_text(c).find("MISMATCH"), std::string::npos);
}

TEST(Certify, CertificateFileMatchesText) {
  CertifyOptions opt;
  opt.N = 24;
  const auto c = houli::full_certificate(opt);
  EXPECT_EQ(houli::certificate_filename(c.N), "certificate-24.txt");

  const std::string path = testing::TempDir() + "houli-certificate-24.txt";
  houli::write_certificate(c, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), houli::certificate_text(c));
  std::remove(path.c_str());
}

TEST(Certify, SmallSizesAreRejected) {
  EXPECT_THROW(houli::build_F_matrix(2, from_ratio(84, 100)), std::invalid_argument);
}

}  // namespace

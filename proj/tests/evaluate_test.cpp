// Copyright 2026 The kdalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "kdalign/dataset.hpp"
#include "kdalign/error.hpp"
#include "kdalign/evaluate.hpp"
#include "kdalign/student.hpp"
#include "test_support.hpp"

namespace kdalign {
namespace {

using testing::slurp;
using testing::TempDir;
using testing::thrown_code;

class EvalTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    generate_synthetic(SyntheticSpec{}, dir_->path() / "default");
    SyntheticSpec clean;
    clean.sigma_lang = 0.0;
    clean.sigma_sample = 0.0;
    generate_synthetic(clean, dir_->path() / "clean");
  }
  static void TearDownTestSuite() { delete dir_; }

  static Dataset load(const char* name) { return load_dataset(dir_->path() / name / "manifest.json"); }
  static TempDir* dir_;
};
TempDir* EvalTest::dir_ = nullptr;

TEST_F(EvalTest, TeacherIsPerfectOnNoiselessData) {
  const Dataset data = load("clean");
  const EvalReport r = evaluate(data, nullptr, "test");
  EXPECT_EQ(r.source, "teacher");
  EXPECT_EQ(r.ks, (std::vector<std::size_t>{1, 5, 10}));
  for (const auto& cell : r.languages) {
    EXPECT_EQ(cell.i2t[0], 1.0) << cell.name;
    EXPECT_EQ(cell.t2i[0], 1.0) << cell.name;
    EXPECT_EQ(cell.mrr[0], 1.0) << cell.name;
    ASSERT_TRUE(cell.vqa.has_value());
    EXPECT_EQ(*cell.vqa, 1.0) << cell.name;
  }
  // Every language shares the teacher's text embedding, so each point has an
  // identical copy in every other language and clusters split evenly.
  EXPECT_EQ(r.purity, 0.25);
}

TEST_F(EvalTest, TeacherOnDefaultData) {
  const Dataset data = load("default");
  EXPECT_GE(multilingual_i2t_recall(data, nullptr, "test"), 0.99);
}

TEST_F(EvalTest, UntrainedStudentIsAtChance) {
  const Dataset data = load("default");
  const double p = 1.0 / 128.0;
  // Pooled over 3 languages x 128 queries.
  const double sigma = std::sqrt(p * (1 - p) / (3 * 128.0));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const StudentParams s = student_init(Arch::kLinear, data.base_dim(), data.teacher_dim(), seed);
    const double r1 = multilingual_i2t_recall(data, &s, "test");
    EXPECT_LE(std::abs(r1 - p), 3 * sigma) << "seed " << seed;
  }
}

TEST_F(EvalTest, AggregatesAreQueryWeightedMeans) {
  const Dataset data = load("default");
  const StudentParams s = student_init(Arch::kMlp2, data.base_dim(), data.teacher_dim(), 4);
  const EvalReport r = evaluate(data, &s, "val");
  ASSERT_TRUE(r.mul.has_value());
  EXPECT_EQ(r.en.name, "En");
  EXPECT_EQ(r.mul->queries, 3u * 64);
  for (std::size_t k = 0; k < r.ks.size(); ++k) {
    double sum = 0;
    for (const auto& c : r.languages)
      if (c.name != "en") sum += c.i2t[k] * static_cast<double>(c.queries);
    EXPECT_NEAR(r.mul->i2t[k], sum / static_cast<double>(r.mul->queries), 1e-15);
  }
  EXPECT_EQ(r.en.i2t, r.languages[0].i2t);
  EXPECT_EQ(r.pca.rows(), 4u * 64);
  EXPECT_EQ(r.pca_languages.size(), 4u * 64);
  EXPECT_EQ(r.purity_points, 4u * 64);
  EXPECT_GT(r.purity, 0.0);
  EXPECT_LE(r.purity, 1.0);
}

TEST_F(EvalTest, MismatchedStudentRejected) {
  const Dataset data = load("default");
  const StudentParams wrong = student_init(Arch::kLinear, 7, data.teacher_dim(), 1);
  EXPECT_EQ(thrown_code([&] { evaluate(data, &wrong, "test"); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(thrown_code([&] { evaluate(data, nullptr, "nope"); }), ErrorCode::kBadConfig);
}

TEST_F(EvalTest, ReportFilesRoundTrip) {
  const Dataset data = load("default");
  const StudentParams s = student_init(Arch::kLinear, data.base_dim(), data.teacher_dim(), 2);
  EvalReport r = evaluate(data, &s, "test");
  r.name = "random";
  TempDir out;
  write_report_files(r, out.path());
  for (const char* f : {"report.json", "table.csv", "mrr.csv", "pca.csv"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  const EvalReport back = read_report(out / "report.json");
  EXPECT_EQ(report_to_json(back), report_to_json(r));
  EXPECT_EQ(report_table_csv(back), slurp(out / "table.csv"));

  TempDir again;
  write_report_files(evaluate(data, &s, "test"), again.path());
  EXPECT_EQ(slurp(again / "pca.csv"), slurp(out / "pca.csv"));

  EXPECT_EQ(thrown_code([] { report_from_json(R"({"format":"other"})"); }), ErrorCode::kBadConfig);
}

TEST_F(EvalTest, ComparisonMarksBestPerColumn) {
  const Dataset data = load("default");
  EvalReport teacher = evaluate(data, nullptr, "test");
  teacher.name = "teacher";
  const StudentParams s = student_init(Arch::kLinear, data.base_dim(), data.teacher_dim(), 2);
  EvalReport student = evaluate(data, &s, "test");
  student.name = "random";

  const ComparisonTable single = compare_reports({teacher});
  EXPECT_EQ(single.rows[0][1].find('*'), std::string::npos);

  const ComparisonTable t = compare_reports({teacher, student});
  EXPECT_EQ(t.header, (std::vector<std::string>{"method", "En_I2T_R@1", "En_T2I_R@1", "Mul_I2T_R@1",
                                                 "Mul_T2I_R@1", "Mul_VQA", "purity"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "teacher");
  EXPECT_NE(t.rows[0][1].find('*'), std::string::npos);
  EXPECT_EQ(t.rows[1][1].find('*'), std::string::npos);
  // Teacher purity is the lower one here, so it carries the mark.
  EXPECT_LT(teacher.purity, student.purity);
  EXPECT_NE(t.rows[0][6].find('*'), std::string::npos);
  EXPECT_FALSE(t.to_text().empty());
  EXPECT_EQ(t.to_csv().substr(0, 6), "method");

  EvalReport val = evaluate(data, nullptr, "val");
  EXPECT_EQ(thrown_code([&] { compare_reports({teacher, val}); }), ErrorCode::kBadConfig);
  EvalReport fewer = student;
  fewer.languages.pop_back();
  EXPECT_EQ(thrown_code([&] { compare_reports({teacher, fewer}); }), ErrorCode::kBadConfig);
}

}  // namespace
}  // namespace kdalign

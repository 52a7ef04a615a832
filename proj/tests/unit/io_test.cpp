// Copyright 2026 The ATENT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>

#include <nlohmann/json.hpp>

#include "atent/checkpoint.hpp"
#include "atent/io.hpp"
#include "test_util.hpp"

namespace atent {
namespace {

namespace fs = std::filesystem;

TEST(IoTest, AtomicWriteAndRead) {
  const fs::path p = testing::scratch_dir("io") / "f.txt";
  atomic_write(p, "one");
  atomic_write(p, "two");
  EXPECT_EQ(read_file(p), "two");
  EXPECT_THROW(read_file(p.parent_path() / "missing"), Error);
}

TEST(IoTest, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(IoTest, DirLockIsExclusive) {
  const fs::path dir = testing::scratch_dir("lock");
  {
    DirLock a(dir);
    EXPECT_TRUE(fs::exists(dir / DirLock::kFileName));
    EXPECT_THROW(DirLock b(dir), Error);
  }
  EXPECT_FALSE(fs::exists(dir / DirLock::kFileName));
  EXPECT_NO_THROW(DirLock c(dir));
}

TEST(CheckpointTest, EncodeDecodeRoundTrip) {
  const ModelParams p = build_small_cnn({1, 8, 8}, {2}, {4, 2}, 3);
  const auto back = decode_atnt(encode_atnt(p.weights));
  EXPECT_EQ(back, p.weights);
}

TEST(CheckpointTest, SaveLoadIsBitwise) {
  const fs::path f = testing::scratch_dir("ckpt") / "m.atnt";
  const ModelParams p = build_mlp({7, 5, 3}, 4);
  save_checkpoint(p, f);
  EXPECT_TRUE(fs::exists(manifest_path(f)));
  const ModelParams q = load_checkpoint(f);
  EXPECT_TRUE(testing::bitwise_equal(p, q));
  EXPECT_EQ(q.arch, p.arch);
}

TEST(CheckpointTest, BadMagicAndTruncation) {
  const ModelParams p = build_mlp({3, 2}, 5);
  std::string bytes = encode_atnt(p.weights);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_atnt(bad), FormatError);
  EXPECT_THROW(decode_atnt(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(decode_atnt(bytes + "x"), FormatError);
}

TEST(CheckpointTest, ManifestMismatchIsAnError) {
  const fs::path f = testing::scratch_dir("ckpt_manifest") / "m.atnt";
  save_checkpoint(build_mlp({3, 4, 2}, 6), f);
  auto doc = nlohmann::json::parse(read_file(manifest_path(f)));
  doc["entries"][0]["shape"] = {4, 3};
  atomic_write(manifest_path(f), doc.dump());
  EXPECT_THROW(load_checkpoint(f), FormatError);
}

TEST(CheckpointTest, TrainerStateRoundTrip) {
  TrainerState s = initial_state(build_mlp({3, 4, 2}, 7));
  s.params.weights[0].value[0] = 0.125;
  s.epoch = 3;
  s.best_metric = 0.75;
  s.best_tiebreak = 0.5;
  s.best_epoch = 2;
  s.epochs_since_best = 1;
  s.history.push_back({0, 0.5, 0.9, 0.3, 0.1, 12.5});
  s.history.push_back({1, 1.0 / 3.0, 0.95, 0.35, 0.1, 0.0});
  const fs::path f = testing::scratch_dir("state") / "state.atnt";
  save_trainer_state(s, f);
  const TrainerState t = load_trainer_state(f);
  EXPECT_TRUE(testing::bitwise_equal(t.params, s.params));
  EXPECT_TRUE(testing::bitwise_equal(t.best_params, s.best_params));
  EXPECT_EQ(t.epoch, 3u);
  EXPECT_EQ(t.best_metric, 0.75);
  EXPECT_EQ(t.best_tiebreak, 0.5);
  EXPECT_EQ(t.best_epoch, 2u);
  EXPECT_EQ(t.epochs_since_best, 1u);
  EXPECT_EQ(t.stopped, false);
  EXPECT_EQ(t.history, s.history);
}

}  // namespace
}  // namespace atent

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

#ifndef ATENT_IO_HPP_
#define ATENT_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace atent {

// Writes `bytes` to path.tmp, flushes, then renames over `path`, so a
// reader sees either the old file or the complete new one.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Shortest decimal that round-trips the double.
std::string format_double(double v);

// Exclusive lock on a directory via an O_EXCL lock file; released on
// destruction. A crashed process leaves the file behind and it must be
// removed by hand.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

  static constexpr const char* kFileName = ".atent.lock";

 private:
  std::filesystem::path file_;
};

}  // namespace atent

#endif  // ATENT_IO_HPP_

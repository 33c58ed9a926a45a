//==============================================================================
// Copyright (c) 2026 The CTDP Authors.
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
//==============================================================================
#include "ctdp/buffer.hpp"

#include <cstdlib>
#include <map>
#include <mutex>

#if defined(__linux__)
#include <sys/mman.h>
#endif

namespace ctdp::detail {
namespace {

constexpr std::size_t kAlignment = 64;
constexpr std::size_t kMinCached = std::size_t{1} << 18;
constexpr std::size_t kCacheLimit = std::size_t{1} << 30;
// Large blocks use huge-page granularity and alignment.
constexpr std::size_t kHugePage = std::size_t{1} << 21;

struct BufferCache {
  std::mutex mutex;
  std::multimap<std::size_t, void*> blocks;
  std::size_t bytes = 0;
};

// Never destroyed, so buffers released during static destruction stay valid.
BufferCache& cache() {
  static BufferCache* c = new BufferCache();
  return *c;
}

std::size_t rounded(std::size_t bytes) noexcept {
  const std::size_t unit = bytes >= kHugePage ? kHugePage : kAlignment;
  return (bytes + unit - 1) / unit * unit;
}

void* allocate(std::size_t size) noexcept {
  if (size < kHugePage) return std::aligned_alloc(kAlignment, size);
  void* p = std::aligned_alloc(kHugePage, size);
#if defined(__linux__) && defined(MADV_HUGEPAGE)
  if (p != nullptr) madvise(p, size, MADV_HUGEPAGE);
#endif
  return p;
}

}  // namespace

void* acquire_buffer(std::size_t bytes) {
  const std::size_t size = rounded(bytes == 0 ? 1 : bytes);
  if (size >= kMinCached) {
    BufferCache& c = cache();
    std::lock_guard<std::mutex> lock(c.mutex);
    auto it = c.blocks.find(size);
    if (it != c.blocks.end()) {
      void* p = it->second;
      c.blocks.erase(it);
      c.bytes -= size;
      return p;
    }
  }
  void* p = allocate(size);
  if (p == nullptr) {
    clear_buffer_cache();
    p = allocate(size);
    if (p == nullptr) throw std::bad_alloc();
  }
  return p;
}

void release_buffer(void* p, std::size_t bytes) noexcept {
  if (p == nullptr) return;
  const std::size_t size = rounded(bytes == 0 ? 1 : bytes);
  if (size >= kMinCached) {
    BufferCache& c = cache();
    std::lock_guard<std::mutex> lock(c.mutex);
    if (c.bytes + size <= kCacheLimit) {
      c.blocks.emplace(size, p);
      c.bytes += size;
      return;
    }
  }
  std::free(p);
}

std::size_t cached_buffer_bytes() noexcept {
  BufferCache& c = cache();
  std::lock_guard<std::mutex> lock(c.mutex);
  return c.bytes;
}

void clear_buffer_cache() noexcept {
  BufferCache& c = cache();
  std::lock_guard<std::mutex> lock(c.mutex);
  for (auto& kv : c.blocks) std::free(kv.second);
  c.blocks.clear();
  c.bytes = 0;
}

}  // namespace ctdp::detail

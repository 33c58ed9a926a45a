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
#pragma once

#include <cstddef>
#include <new>
#include <utility>

namespace ctdp::detail {

/// 64-byte aligned storage. Large blocks are recycled through a process-wide
/// cache so repeated same-sized tensors do not fault in fresh pages.
void* acquire_buffer(std::size_t bytes);
void release_buffer(void* p, std::size_t bytes) noexcept;

/// Bytes currently parked in the cache.
std::size_t cached_buffer_bytes() noexcept;
void clear_buffer_cache() noexcept;

/// Allocator whose value-less construct() default-initializes, so resizing
/// a container of scalars leaves them unwritten.
template <typename T>
struct BufferAllocator {
  using value_type = T;

  BufferAllocator() noexcept = default;
  template <typename U>
  BufferAllocator(const BufferAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(acquire_buffer(n * sizeof(T))); }
  void deallocate(T* p, std::size_t n) noexcept { release_buffer(p, n * sizeof(T)); }

  template <typename U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }

  template <typename U>
  friend bool operator==(const BufferAllocator&, const BufferAllocator<U>&) noexcept {
    return true;
  }
};

}  // namespace ctdp::detail

/* Copyright 2026 The spinqoc Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "spinqoc/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace spinqoc::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar,
                              detail::cmatmul_scalar,
                              detail::dot_scalar,
                              detail::axpy_scalar,
                              detail::cgemv_scalar,
                              detail::cmul_pointwise_scalar};

#if SPINQOC_X86
constexpr KernelTable kAvx2{Isa::avx2,
                            detail::cmatmul_avx2,
                            detail::dot_avx2,
                            detail::axpy_avx2,
                            detail::cgemv_avx2,
                            detail::cmul_pointwise_avx2};
#endif

const KernelTable* choose_default() {
  if (const char* env = std::getenv("SPINQOC_KERNELS")) {
    if (std::string(env) == "scalar") return &kScalar;
  }
  if (const KernelTable* t = avx2_table(); t != nullptr && cpu_has_avx2()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{choose_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if SPINQOC_X86
  return &kAvx2;
#else
  return nullptr;
#endif
}

bool cpu_has_avx2() {
#if SPINQOC_X86 && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  if (isa == Isa::scalar) {
    current().store(&kScalar);
    return true;
  }
  const KernelTable* t = avx2_table();
  if (t == nullptr || !cpu_has_avx2()) return false;
  current().store(t);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace spinqoc::kernels

#pragma once

// Keeps large tensor buffers on the heap instead of fresh mmap pages per
// allocation. Training allocates and frees many multi-megabyte buffers per step.

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace samast {

inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

}  // namespace samast

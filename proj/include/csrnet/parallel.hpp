// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace csrnet {

/// Process-wide worker count used by the convolution kernels. Defaults to 1.
void set_num_threads(int n);
int num_threads();

/// Splits [0, count) into at most num_threads() contiguous chunks and calls
/// fn(begin, end, chunk_index) for each. The partition depends only on
/// `count` and the thread count, so per-chunk reductions summed in chunk
/// order are deterministic.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Number of chunks parallel_for will use for `count` items.
std::size_t parallel_chunks(std::size_t count);

}  // namespace csrnet

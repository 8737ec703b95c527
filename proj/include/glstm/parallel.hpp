#pragma once

namespace glstm {

/// Worker cap for the OpenMP kernels: GLSTM_THREADS when set to a positive
/// integer, otherwise the machine parallelism. Always 1 without OpenMP.
int worker_count();

}  // namespace glstm

#ifndef SIMJOIN_KERNELCORE_H
#define SIMJOIN_KERNELCORE_H

#include <stdint.h>

uint64_t sj_fnv1a64(const unsigned char* data, long n);
void sj_synthetic_fill(uint64_t stream_seed, long dim, float* out);
long sj_normalize_rows(float* m, long n, long dim);
void sj_row_norms(const float* m, long n, long dim, float* out);
float sj_dot_seq(const float* a, const float* b, long dim);
void sj_dots_vm(const float* a, const float* m, long n, long dim, float* out);
void sj_pack_transpose(const float* src, long n, long dim, float* dst);
void sj_tile_dot(const float* left, long lda, const float* bt, long ldb,
                 long nl, long nr, long dim, float* out, long ldo);
long sj_scan_count(const float* buf, long nelem, float theta);
long sj_scan_fill(const float* buf, long nl, long nr, float theta,
                  uint64_t left0, uint64_t right0,
                  uint64_t* lefts, uint64_t* rights, float* sims);
long sj_nlj_row(const float* a, const float* rows, long ns, long dim,
                float theta, float band, uint64_t* out_j, float* out_s);
long sj_nlj_rows(const float* left, long i0, long i1,
                 const float* rows, long ns, long dim,
                 float theta, float band,
                 uint64_t* out_i, uint64_t* out_j, float* out_s,
                 long cap, long* next_row);

#endif

/* fp32 similarity kernels.
 *
 * Every similarity that leaves this file is the canonical value: a dot
 * product accumulated sequentially over the dimension axis in fp32 (one
 * fused multiply-add per component where the hardware has FMA).  The tile
 * kernel blocks over rows and columns for register/cache reuse but never
 * splits or reorders the dimension loop of a single pair, so a cell of a
 * tile is bitwise equal to sj_dot_seq of the same two rows.  This makes
 * join results independent of tiling, batching, and thread count.
 *
 * Must be compiled with -ffp-contract=off: implicit contraction would
 * change the rounding of the plain mul/add paths (normalization, the
 * value mapping) that the pure-Python backend reproduces exactly.
 */

#include "_kernelcore.h"

#include <math.h>
#include <string.h>

#if defined(__FMA__)
#define MADD(a, b, c) fmaf((a), (b), (c))
#else
#define MADD(a, b, c) ((c) + (a) * (b))
#endif

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

/* ---------------- hashing and synthetic vectors ---------------- */

uint64_t sj_fnv1a64(const unsigned char* data, long n) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (long i = 0; i < n; i++) {
        h ^= (uint64_t)data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

static inline uint64_t splitmix64(uint64_t* state) {
    uint64_t z = (*state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/* Sequential fp64 sum of squares, then per-component fp64 division.
 * Rows with norm below 1e-12 get component 0 forced to 1.0 before the
 * division.  Returns 1 if the row was repaired. */
static int normalize_row(float* row, long dim) {
    if (dim == 0) return 0;
    double ss = 0.0;
    for (long d = 0; d < dim; d++)
        ss += (double)row[d] * (double)row[d];
    double norm = sqrt(ss);
    int repaired = 0;
    if (norm < 1e-12) {
        row[0] = 1.0f;
        ss = 0.0;
        for (long d = 0; d < dim; d++)
            ss += (double)row[d] * (double)row[d];
        norm = sqrt(ss);
        repaired = 1;
    }
    for (long d = 0; d < dim; d++)
        row[d] = (float)((double)row[d] / norm);
    return repaired;
}

void sj_synthetic_fill(uint64_t stream_seed, long dim, float* out) {
    uint64_t state = stream_seed;
    for (long d = 0; d < dim; d++) {
        uint64_t u = splitmix64(&state);
        double v = ((double)u * 0x1p-64) * 2.0 - 1.0;
        out[d] = (float)v;
    }
    normalize_row(out, dim);
}

long sj_normalize_rows(float* m, long n, long dim) {
    long repaired = 0;
    for (long i = 0; i < n; i++)
        repaired += normalize_row(m + i * dim, dim);
    return repaired;
}

void sj_row_norms(const float* m, long n, long dim, float* out) {
    for (long i = 0; i < n; i++) {
        const float* row = m + i * dim;
        double ss = 0.0;
        for (long d = 0; d < dim; d++)
            ss += (double)row[d] * (double)row[d];
        out[i] = (float)sqrt(ss);
    }
}

/* ---------------- canonical dot products ---------------- */

float sj_dot_seq(const float* a, const float* b, long dim) {
    float acc = 0.0f;
    for (long d = 0; d < dim; d++)
        acc = MADD(a[d], b[d], acc);
    return acc;
}

void sj_dots_vm(const float* a, const float* m, long n, long dim, float* out) {
    for (long i = 0; i < n; i++)
        out[i] = sj_dot_seq(a, m + i * dim, dim);
}

void sj_pack_transpose(const float* src, long n, long dim, float* dst) {
    for (long i = 0; i < n; i++)
        for (long d = 0; d < dim; d++)
            dst[d * n + i] = src[i * dim + d];
}

/* ---------------- blocked tile kernel ---------------- */

/* Edge micro: one left row against 16 right columns, accumulators local
 * so the j-loop vectorizes; per-pair order stays sequential in d. */
static void edge_1x16(const float* a, const float* bt, long ldb, long dim,
                      float* out) {
    float acc[16];
    for (int v = 0; v < 16; v++)
        acc[v] = 0.0f;
    for (long d = 0; d < dim; d++) {
        const float ad = a[d];
        const float* row = bt + d * ldb;
        for (int v = 0; v < 16; v++)
            acc[v] = MADD(ad, row[v], acc[v]);
    }
    memcpy(out, acc, sizeof(acc));
}

static void tile_edge(const float* left, long lda, const float* bt, long ldb,
                      long nl, long nr, long dim, float* out, long ldo) {
    long vend = nr - (nr % 16);
    for (long i = 0; i < nl; i++) {
        const float* a = left + i * lda;
        for (long j = 0; j < vend; j += 16)
            edge_1x16(a, bt + j, ldb, dim, out + i * ldo + j);
        for (long j = vend; j < nr; j++) {
            float s = 0.0f;
            for (long d = 0; d < dim; d++)
                s = MADD(a[d], bt[d * ldb + j], s);
            out[i * ldo + j] = s;
        }
    }
}

#if defined(__AVX512F__)

#define SJ_MR 6
#define SJ_NRW 64

/* 6 left rows x 64 right columns held in 24 zmm accumulators; the packed
 * right panel is loaded once per dimension step and reused across rows. */
static void micro_6x64(const float* left, long lda, const float* bt, long ldb,
                       long dim, float* out, long ldo) {
    __m512 c00 = _mm512_setzero_ps(), c01 = c00, c02 = c00, c03 = c00;
    __m512 c10 = c00, c11 = c00, c12 = c00, c13 = c00;
    __m512 c20 = c00, c21 = c00, c22 = c00, c23 = c00;
    __m512 c30 = c00, c31 = c00, c32 = c00, c33 = c00;
    __m512 c40 = c00, c41 = c00, c42 = c00, c43 = c00;
    __m512 c50 = c00, c51 = c00, c52 = c00, c53 = c00;
    for (long d = 0; d < dim; d++) {
        const float* row = bt + d * ldb;
        __m512 b0 = _mm512_loadu_ps(row);
        __m512 b1 = _mm512_loadu_ps(row + 16);
        __m512 b2 = _mm512_loadu_ps(row + 32);
        __m512 b3 = _mm512_loadu_ps(row + 48);
        __m512 a0 = _mm512_set1_ps(left[0 * lda + d]);
        c00 = _mm512_fmadd_ps(a0, b0, c00);
        c01 = _mm512_fmadd_ps(a0, b1, c01);
        c02 = _mm512_fmadd_ps(a0, b2, c02);
        c03 = _mm512_fmadd_ps(a0, b3, c03);
        __m512 a1 = _mm512_set1_ps(left[1 * lda + d]);
        c10 = _mm512_fmadd_ps(a1, b0, c10);
        c11 = _mm512_fmadd_ps(a1, b1, c11);
        c12 = _mm512_fmadd_ps(a1, b2, c12);
        c13 = _mm512_fmadd_ps(a1, b3, c13);
        __m512 a2 = _mm512_set1_ps(left[2 * lda + d]);
        c20 = _mm512_fmadd_ps(a2, b0, c20);
        c21 = _mm512_fmadd_ps(a2, b1, c21);
        c22 = _mm512_fmadd_ps(a2, b2, c22);
        c23 = _mm512_fmadd_ps(a2, b3, c23);
        __m512 a3 = _mm512_set1_ps(left[3 * lda + d]);
        c30 = _mm512_fmadd_ps(a3, b0, c30);
        c31 = _mm512_fmadd_ps(a3, b1, c31);
        c32 = _mm512_fmadd_ps(a3, b2, c32);
        c33 = _mm512_fmadd_ps(a3, b3, c33);
        __m512 a4 = _mm512_set1_ps(left[4 * lda + d]);
        c40 = _mm512_fmadd_ps(a4, b0, c40);
        c41 = _mm512_fmadd_ps(a4, b1, c41);
        c42 = _mm512_fmadd_ps(a4, b2, c42);
        c43 = _mm512_fmadd_ps(a4, b3, c43);
        __m512 a5 = _mm512_set1_ps(left[5 * lda + d]);
        c50 = _mm512_fmadd_ps(a5, b0, c50);
        c51 = _mm512_fmadd_ps(a5, b1, c51);
        c52 = _mm512_fmadd_ps(a5, b2, c52);
        c53 = _mm512_fmadd_ps(a5, b3, c53);
    }
    _mm512_storeu_ps(out + 0 * ldo, c00);
    _mm512_storeu_ps(out + 0 * ldo + 16, c01);
    _mm512_storeu_ps(out + 0 * ldo + 32, c02);
    _mm512_storeu_ps(out + 0 * ldo + 48, c03);
    _mm512_storeu_ps(out + 1 * ldo, c10);
    _mm512_storeu_ps(out + 1 * ldo + 16, c11);
    _mm512_storeu_ps(out + 1 * ldo + 32, c12);
    _mm512_storeu_ps(out + 1 * ldo + 48, c13);
    _mm512_storeu_ps(out + 2 * ldo, c20);
    _mm512_storeu_ps(out + 2 * ldo + 16, c21);
    _mm512_storeu_ps(out + 2 * ldo + 32, c22);
    _mm512_storeu_ps(out + 2 * ldo + 48, c23);
    _mm512_storeu_ps(out + 3 * ldo, c30);
    _mm512_storeu_ps(out + 3 * ldo + 16, c31);
    _mm512_storeu_ps(out + 3 * ldo + 32, c32);
    _mm512_storeu_ps(out + 3 * ldo + 48, c33);
    _mm512_storeu_ps(out + 4 * ldo, c40);
    _mm512_storeu_ps(out + 4 * ldo + 16, c41);
    _mm512_storeu_ps(out + 4 * ldo + 32, c42);
    _mm512_storeu_ps(out + 4 * ldo + 48, c43);
    _mm512_storeu_ps(out + 5 * ldo, c50);
    _mm512_storeu_ps(out + 5 * ldo + 16, c51);
    _mm512_storeu_ps(out + 5 * ldo + 32, c52);
    _mm512_storeu_ps(out + 5 * ldo + 48, c53);
}

#else

#define SJ_MR 4
#define SJ_NRW 32

/* Generic microkernel; the two-step dimension unroll keeps a single
 * sequential accumulator chain per pair, so rounding matches sj_dot_seq. */
static void micro_generic(const float* left, long lda, const float* bt,
                          long ldb, long dim, float* out, long ldo) {
    float acc[SJ_MR][SJ_NRW];
    for (int m = 0; m < SJ_MR; m++)
        for (int v = 0; v < SJ_NRW; v++)
            acc[m][v] = 0.0f;
    long d = 0;
    for (; d + 2 <= dim; d += 2) {
        const float* row0 = bt + d * ldb;
        const float* row1 = bt + (d + 1) * ldb;
        for (int m = 0; m < SJ_MR; m++) {
            const float a0 = left[m * lda + d];
            const float a1 = left[m * lda + d + 1];
            for (int v = 0; v < SJ_NRW; v++)
                acc[m][v] = MADD(a1, row1[v], MADD(a0, row0[v], acc[m][v]));
        }
    }
    for (; d < dim; d++) {
        const float* row = bt + d * ldb;
        for (int m = 0; m < SJ_MR; m++) {
            const float am = left[m * lda + d];
            for (int v = 0; v < SJ_NRW; v++)
                acc[m][v] = MADD(am, row[v], acc[m][v]);
        }
    }
    for (int m = 0; m < SJ_MR; m++)
        memcpy(out + m * ldo, acc[m], SJ_NRW * sizeof(float));
}

#endif

/* Left rows are walked in SJ_MC blocks so the left panel stays cached
 * while the packed right panel is re-streamed. */
#define SJ_MC 1020

void sj_tile_dot(const float* left, long lda, const float* bt, long ldb,
                 long nl, long nr, long dim, float* out, long ldo) {
    for (long ic = 0; ic < nl; ic += SJ_MC) {
        long mc = nl - ic < SJ_MC ? nl - ic : SJ_MC;
        long full = ic + (mc / SJ_MR) * SJ_MR;
        long j0 = 0;
        for (; j0 + SJ_NRW <= nr; j0 += SJ_NRW) {
            for (long i0 = ic; i0 < full; i0 += SJ_MR)
#if defined(__AVX512F__)
                micro_6x64(left + i0 * lda, lda, bt + j0, ldb, dim,
                           out + i0 * ldo + j0, ldo);
#else
                micro_generic(left + i0 * lda, lda, bt + j0, ldb, dim,
                              out + i0 * ldo + j0, ldo);
#endif
            if (full < ic + mc)
                tile_edge(left + full * lda, lda, bt + j0, ldb,
                          ic + mc - full, SJ_NRW, dim, out + full * ldo + j0, ldo);
        }
        if (j0 < nr)
            tile_edge(left + ic * lda, lda, bt + j0, ldb,
                      mc, nr - j0, dim, out + ic * ldo + j0, ldo);
    }
}

/* ---------------- threshold scans ---------------- */

long sj_scan_count(const float* buf, long nelem, float theta) {
    long k = 0;
    for (long i = 0; i < nelem; i++)
        if (buf[i] >= theta) k++;
    return k;
}

long sj_scan_fill(const float* buf, long nl, long nr, float theta,
                  uint64_t left0, uint64_t right0,
                  uint64_t* lefts, uint64_t* rights, float* sims) {
    long k = 0;
    for (long i = 0; i < nl; i++) {
        const float* row = buf + i * nr;
        for (long j = 0; j < nr; j++) {
            if (row[j] >= theta) {
                lefts[k] = left0 + (uint64_t)i;
                rights[k] = right0 + (uint64_t)j;
                sims[k] = row[j];
                k++;
            }
        }
    }
    return k;
}

/* ---------------- row-at-a-time join kernel ---------------- */

/* Per-pair dot over row-major operands, vectorized within the dimension
 * axis.  Reassociates the sum, so it is only used as a prefilter; any
 * candidate within `band` of the threshold is re-evaluated with the
 * canonical sequential kernel before it may be emitted. */
static inline float pair_dot(const float* a, const float* b, long dim) {
#if defined(__AVX512F__)
    __m512 s0 = _mm512_setzero_ps(), s1 = s0, s2 = s0, s3 = s0;
    long d = 0;
    for (; d + 64 <= dim; d += 64) {
        s0 = _mm512_fmadd_ps(_mm512_loadu_ps(a + d), _mm512_loadu_ps(b + d), s0);
        s1 = _mm512_fmadd_ps(_mm512_loadu_ps(a + d + 16), _mm512_loadu_ps(b + d + 16), s1);
        s2 = _mm512_fmadd_ps(_mm512_loadu_ps(a + d + 32), _mm512_loadu_ps(b + d + 32), s2);
        s3 = _mm512_fmadd_ps(_mm512_loadu_ps(a + d + 48), _mm512_loadu_ps(b + d + 48), s3);
    }
    for (; d + 16 <= dim; d += 16)
        s0 = _mm512_fmadd_ps(_mm512_loadu_ps(a + d), _mm512_loadu_ps(b + d), s0);
    float tail = 0.0f;
    for (; d < dim; d++)
        tail = MADD(a[d], b[d], tail);
    s0 = _mm512_add_ps(_mm512_add_ps(s0, s1), _mm512_add_ps(s2, s3));
    return _mm512_reduce_add_ps(s0) + tail;
#else
    float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
    long d = 0;
    for (; d + 4 <= dim; d += 4) {
        s0 = MADD(a[d], b[d], s0);
        s1 = MADD(a[d + 1], b[d + 1], s1);
        s2 = MADD(a[d + 2], b[d + 2], s2);
        s3 = MADD(a[d + 3], b[d + 3], s3);
    }
    for (; d < dim; d++)
        s0 = MADD(a[d], b[d], s0);
    return (s0 + s1) + (s2 + s3);
#endif
}

long sj_nlj_row(const float* a, const float* rows, long ns, long dim,
                float theta, float band, uint64_t* out_j, float* out_s) {
    long k = 0;
    const float cutoff = theta - band;
    for (long j = 0; j < ns; j++) {
        const float* b = rows + j * dim;
        if (pair_dot(a, b, dim) >= cutoff) {
            float sim = sj_dot_seq(a, b, dim);
            if (sim >= theta) {
                out_j[k] = (uint64_t)j;
                out_s[k] = sim;
                k++;
            }
        }
    }
    return k;
}

long sj_nlj_rows(const float* left, long i0, long i1,
                 const float* rows, long ns, long dim,
                 float theta, float band,
                 uint64_t* out_i, uint64_t* out_j, float* out_s,
                 long cap, long* next_row) {
    long k = 0;
    long i = i0;
    for (; i < i1 && k + ns <= cap; i++) {
        long h = sj_nlj_row(left + i * dim, rows, ns, dim, theta, band,
                            out_j + k, out_s + k);
        for (long t = 0; t < h; t++)
            out_i[k + t] = (uint64_t)i;
        k += h;
    }
    *next_row = i;
    return k;
}

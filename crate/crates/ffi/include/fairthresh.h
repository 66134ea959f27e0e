#ifndef FAIRTHRESH_H
#define FAIRTHRESH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_ARGUMENT = 2,
  FT_STATUS_INFEASIBLE = 3,
  FT_STATUS_DATA = 4,
  FT_STATUS_INTERNAL = 5,
} FtStatus;

// A threshold distribution.
typedef struct FtDistribution FtDistribution;

// A fitted policy.
typedef struct FtPolicy FtPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after success.
const char *ft_last_error(void);

// Writes `g^{-1}(1 / lambda)` for `g(d) = alpha * d^beta`.
enum FtStatus ft_cap_constant(double lambda, double alpha, double beta, double *out);

// Parses a distribution from JSON (`{"kind": "piecewise", ...}` or
// `{"kind": "dirac", "t0": ...}`).
enum FtStatus ft_distribution_from_json(const char *json, struct FtDistribution **out);

void ft_distribution_free(struct FtDistribution *dist);

// Probability of a positive decision at `score` after best response.
enum FtStatus ft_distribution_expected_outcome(const struct FtDistribution *dist,
                                               double lambda,
                                               double alpha,
                                               double beta,
                                               double score,
                                               double *out);

// Expected best-response cost at `score`.
enum FtStatus ft_distribution_expected_brc(const struct FtDistribution *dist,
                                           double lambda,
                                           double alpha,
                                           double beta,
                                           double score,
                                           double *out);

// Fits a policy on precomputed scores. `groups` may be null when
// `spec_json` has no group constraint. The fitted policy scores feature
// vectors by their first coordinate.
enum FtStatus ft_policy_fit(const double *scores,
                            const uint8_t *labels,
                            const uint32_t *groups,
                            size_t n,
                            const char *spec_json,
                            double lambda,
                            double alpha,
                            double beta,
                            struct FtPolicy **out);

enum FtStatus ft_policy_from_json(const char *json, struct FtPolicy **out);

// Serializes the policy; free the result with `ft_string_free`.
enum FtStatus ft_policy_to_json(const struct FtPolicy *policy, char **out);

// One randomized decision. Pass `group < 0` for policies without groups.
enum FtStatus ft_policy_predict(const struct FtPolicy *policy,
                                const double *features,
                                size_t len,
                                int64_t group,
                                uint64_t seed,
                                bool strict,
                                uint8_t *out);

enum FtStatus ft_policy_expected_outcome(const struct FtPolicy *policy,
                                         const double *features,
                                         size_t len,
                                         int64_t group,
                                         double *out);

enum FtStatus ft_policy_expected_brc(const struct FtPolicy *policy,
                                     const double *features,
                                     size_t len,
                                     int64_t group,
                                     double *out);

void ft_policy_free(struct FtPolicy *policy);

void ft_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRTHRESH_H */

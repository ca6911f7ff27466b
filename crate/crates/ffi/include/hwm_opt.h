#ifndef HWM_OPT_H
#define HWM_OPT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Values of `HwmQuote::method`.
typedef enum HwmMethod {
  HWM_METHOD_CLOSED_FORM = 0,
  HWM_METHOD_LAPLACE_INVERSION = 1,
  HWM_METHOD_MONTE_CARLO = 2,
  HWM_METHOD_PARITY = 3,
} HwmMethod;

// Values accepted by [`hwm_params_set_mode`].
typedef enum HwmMode {
  HWM_MODE_FIXED = 0,
  HWM_MODE_ACCRUING_AT_RATE = 1,
} HwmMode;

// Values accepted by [`hwm_simulate`].
typedef enum HwmPayoff {
  HWM_PAYOFF_CALL = 0,
  HWM_PAYOFF_PUT = 1,
  HWM_PAYOFF_FORWARD = 2,
} HwmPayoff;

typedef enum HwmStatus {
  HWM_STATUS_OK = 0,
  HWM_STATUS_NULL_POINTER = 1,
  HWM_STATUS_INVALID_PARAMETERS = 2,
  HWM_STATUS_DOMAIN = 3,
  HWM_STATUS_NUMERIC = 4,
  HWM_STATUS_PANIC = 5,
} HwmStatus;

typedef struct HwmParams HwmParams;

typedef struct HwmQuote {
  double value;
  double error_estimate;
  uint32_t method;
} HwmQuote;

typedef struct HwmMcResult {
  double price_mean;
  double std_error;
  uint64_t paths;
  double occupation_above_fraction;
  double barrier_hit_fraction;
} HwmMcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hwm_version(void);

// Message for the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call into the library on this thread.
const char *hwm_last_error_message(void);

// New parameter set in fixed-mark mode at inception. Rates are decimals per
// year. Values are validated when a price is requested.
struct HwmParams *hwm_params_new(double spot,
                                 double hwm,
                                 double strike,
                                 double maturity,
                                 double rate,
                                 double alpha,
                                 double mgmt_fee,
                                 double incentive,
                                 double mu,
                                 double vol);

// # Safety
// `params` must be null or a handle from [`hwm_params_new`] or
// [`hwm_params_clone`] that has not been freed.
struct HwmParams *hwm_params_clone(const struct HwmParams *params);

// # Safety
// `params` must be null or a live handle; it is invalid afterwards.
void hwm_params_free(struct HwmParams *params);

// # Safety
// `params` must be null or a live handle.
enum HwmStatus hwm_params_set_strike(struct HwmParams *params, double strike);

// # Safety
// `params` must be null or a live handle.
enum HwmStatus hwm_params_set_maturity(struct HwmParams *params, double maturity);

// Values after inception: `spot` is the NAV at `valuation_time`, and
// `maturity` stays measured from inception.
//
// # Safety
// `params` must be null or a live handle.
enum HwmStatus hwm_params_set_valuation(struct HwmParams *params,
                                        double valuation_time,
                                        double spot);

// `mode` is one of the `HWM_MODE_*` values.
//
// # Safety
// `params` must be null or a live handle.
enum HwmStatus hwm_params_set_mode(struct HwmParams *params, uint32_t mode);

// Euler-summation settings: `n` series terms, `m` averaged partial sums and
// the discretization parameter `A`.
//
// # Safety
// `params` must be null or a live handle.
enum HwmStatus hwm_params_set_inversion(struct HwmParams *params,
                                        uint32_t series_terms,
                                        uint32_t euler_terms,
                                        double discretization);

// # Safety
// `params` must be a live handle and `out` writable; either may be null, in
// which case `HWM_STATUS_NULL_POINTER` is returned.
enum HwmStatus hwm_price_call(const struct HwmParams *params, struct HwmQuote *out);

// # Safety
// As [`hwm_price_call`].
enum HwmStatus hwm_price_put(const struct HwmParams *params, struct HwmQuote *out);

// # Safety
// As [`hwm_price_call`].
enum HwmStatus hwm_price_forward(const struct HwmParams *params, struct HwmQuote *out);

// Call with the mark accruing at the riskless rate; the handle must be in
// `HWM_MODE_ACCRUING_AT_RATE`.
//
// # Safety
// As [`hwm_price_call`].
enum HwmStatus hwm_price_moving_call(const struct HwmParams *params, struct HwmQuote *out);

// Monte Carlo price. `payoff` is one of the `HWM_PAYOFF_*` values; `paths`
// counts every simulated path, antithetic partners included.
//
// # Safety
// As [`hwm_price_call`].
enum HwmStatus hwm_simulate(const struct HwmParams *params,
                            uint32_t payoff,
                            uint64_t paths,
                            uint32_t steps_per_year,
                            uint64_t seed,
                            bool antithetic,
                            struct HwmMcResult *out);

// Fee-free lognormal call with continuous yield `q`.
double hwm_merton_call(double spot,
                       double strike,
                       double maturity,
                       double rate,
                       double q,
                       double vol);

// Fee-free lognormal put with continuous yield `q`.
double hwm_merton_put(double spot,
                      double strike,
                      double maturity,
                      double rate,
                      double q,
                      double vol);

// Copies the last error message into `buf`, truncating and always
// terminating when `len > 0`. Returns the full message length.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t hwm_copy_last_error(char *buf, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HWM_OPT_H */

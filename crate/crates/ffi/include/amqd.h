#ifndef AMQD_H
#define AMQD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Homodyne key-rate variants, passed as plain integers.
 */
#define AMQD_ONEWAY_RR 0

#define AMQD_ONEWAY_DR 1

#define AMQD_TWOWAY_RR 2

#define AMQD_TWOWAY_DR 3

typedef enum AmqdStatus {
  AMQD_STATUS_OK = 0,
  AMQD_STATUS_NULL_POINTER = 1,
  AMQD_STATUS_INVALID_DIMENSION = 2,
  AMQD_STATUS_INVALID_PARAMETER = 3,
  AMQD_STATUS_DOMAIN = 4,
  AMQD_STATUS_POLE = 5,
  AMQD_STATUS_INDEX_OUT_OF_RANGE = 6,
  AMQD_STATUS_LENGTH_MISMATCH = 7,
  AMQD_STATUS_INVALID_UTF8 = 8,
  AMQD_STATUS_PARSE = 9,
  AMQD_STATUS_BUFFER_TOO_SMALL = 10,
  AMQD_STATUS_PANIC = 11,
} AmqdStatus;

/**
 * Opaque sub-channel set.
 */
typedef struct AmqdChannelSet AmqdChannelSet;

/**
 * Opaque allocation plan.
 */
typedef struct AmqdPlan AmqdPlan;

/**
 * Opaque parsed scenario.
 */
typedef struct AmqdScenario AmqdScenario;

typedef struct AmqdComplex {
  double re;
  double im;
} AmqdComplex;

/**
 * Headline figures for a scenario.
 */
typedef struct AmqdReport {
  size_t n;
  size_t selected_count;
  double rate_single;
  double rate_amqd;
  double rate_exact;
  double rate_constant;
  double capacity_complex;
  double snr;
  double oneway_rr_hom;
  double oneway_dr_hom;
  double twoway_rr_hom;
  double twoway_dr_hom;
  double excess_noise_single;
  double excess_noise_amqd;
  double kappa;
  double chi_single;
  double chi_amqd;
  double crosstalk_leak;
  double chi_amqd_crosstalk;
  bool security_holds;
} AmqdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *amqd_last_error(void);

/**
 * Static name of a status code.
 */
const char *amqd_status_name(enum AmqdStatus status);

/**
 * Unitary DFT of `n` values; `inverse` selects the inverse transform.
 *
 * # Safety
 * `input_ptr` and `out` must each point to `n` elements.
 */
enum AmqdStatus amqd_dft(const struct AmqdComplex *input_ptr,
                         size_t n,
                         bool inverse,
                         struct AmqdComplex *out);

/**
 * AWGN capacity, per complex dimension when `complex` is true.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AmqdStatus amqd_capacity(double variance,
                              double gain_sq,
                              double noise,
                              bool complex,
                              double *out);

/**
 * Homodyne key rate for one of the `AMQD_*` variants.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AmqdStatus amqd_key_rate(uint32_t which, double t, double w, double *out);

/**
 * Excess noise `(W - 1) g / (1 - g)` for Eve's squared gain `g`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AmqdStatus amqd_excess_noise(double w, double gain_sq, double *out);

/**
 * Ratio of single-carrier to multicarrier excess noise. `ordered` may be
 * null.
 *
 * # Safety
 * `out` must be valid; `ordered` must be valid or null.
 */
enum AmqdStatus amqd_kappa(double w,
                           double single_gain_sq,
                           double amqd_gain_sq,
                           double *out,
                           bool *ordered);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum AmqdStatus amqd_thermal_entropy(double w, double *out);

/**
 * Builds `n` sub-channels from their Fourier-domain gains and noise
 * variances, with a uniform crosstalk coefficient.
 *
 * # Safety
 * `gains` and `noise` must point to `n` elements; `out` must be valid.
 */
enum AmqdStatus amqd_channel_set_new(const struct AmqdComplex *gains,
                                     const double *noise,
                                     size_t n,
                                     double crosstalk,
                                     struct AmqdChannelSet **out);

/**
 * # Safety
 * `set` must come from [`amqd_channel_set_new`] or be null.
 */
void amqd_channel_set_free(struct AmqdChannelSet *set);

/**
 * # Safety
 * `set` must be a live handle.
 */
size_t amqd_channel_set_len(const struct AmqdChannelSet *set);

/**
 * Noise-to-gain ratios `nu_i` of every sub-channel.
 *
 * # Safety
 * `set` must be live and `out` must hold `len` elements.
 */
enum AmqdStatus amqd_channel_set_nu(const struct AmqdChannelSet *set, double *out, size_t len);

/**
 * Sends one block through the channels: encodes `z` (quadrature variance
 * `q`), applies the gains and noise, and writes the decoded output.
 * `tau` may be null.
 *
 * # Safety
 * `set` must be live; `z` and `out` must hold the channel count.
 */
enum AmqdStatus amqd_transmit_block(const struct AmqdChannelSet *set,
                                    const struct AmqdComplex *z,
                                    double q,
                                    uint64_t seed,
                                    uint64_t block_index,
                                    struct AmqdComplex *out,
                                    double *tau);

/**
 * Exact water-filling plan. Pass `budget < 0` or NaN to fill up to
 * `nu_eve` instead of spending a fixed budget.
 *
 * # Safety
 * `nu` must hold `n` elements and `out` must be valid.
 */
enum AmqdStatus amqd_plan_exact(const double *nu,
                                size_t n,
                                double nu_eve,
                                double budget,
                                struct AmqdPlan **out);

/**
 * Constant-variance plan on the channels with `nu_i < nu_eve`.
 *
 * # Safety
 * `nu` must hold `n` elements and `out` must be valid.
 */
enum AmqdStatus amqd_plan_constant(const double *nu,
                                   size_t n,
                                   double nu_eve,
                                   struct AmqdPlan **out);

/**
 * # Safety
 * `plan` must come from an `amqd_plan_*` constructor or be null.
 */
void amqd_plan_free(struct AmqdPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
size_t amqd_plan_len(const struct AmqdPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
size_t amqd_plan_selected_count(const struct AmqdPlan *plan);

/**
 * Variance placed on each channel.
 *
 * # Safety
 * `plan` must be live and `out` must hold `len` elements.
 */
enum AmqdStatus amqd_plan_variances(const struct AmqdPlan *plan, double *out, size_t len);

/**
 * Multicarrier rate of `plan` over squared gains `gains_sq` with one
 * aggregate noise variance.
 *
 * # Safety
 * `plan` must be live, `gains_sq` must hold `n` elements, `out` valid.
 */
enum AmqdStatus amqd_plan_rate(const struct AmqdPlan *plan,
                               const double *gains_sq,
                               size_t n,
                               double noise,
                               double *out);

/**
 * Parses a scenario from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum AmqdStatus amqd_scenario_from_json(const char *json, struct AmqdScenario **out);

/**
 * # Safety
 * `s` must come from [`amqd_scenario_from_json`] or be null.
 */
void amqd_scenario_free(struct AmqdScenario *s);

/**
 * Writes the 64-character hex scenario hash plus a NUL into `buf`.
 *
 * # Safety
 * `s` must be live and `buf` must hold `len` bytes.
 */
enum AmqdStatus amqd_scenario_hash(const struct AmqdScenario *s, char *buf, size_t len);

/**
 * Evaluates the scenario and fills `report`.
 *
 * # Safety
 * `s` must be live and `report` a valid pointer.
 */
enum AmqdStatus amqd_scenario_evaluate(const struct AmqdScenario *s, struct AmqdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMQD_H */

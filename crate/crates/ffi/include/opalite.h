#ifndef OPALITE_H
#define OPALITE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OpaliteStatus {
  OPALITE_STATUS_OK = 0,
  OPALITE_STATUS_NULL_POINTER = 1,
  OPALITE_STATUS_INVALID_ARGUMENT = 2,
  OPALITE_STATUS_CONFIG = 3,
  OPALITE_STATUS_SINGULAR = 4,
  OPALITE_STATUS_CONVERGENCE = 5,
  OPALITE_STATUS_EIGEN = 6,
  OPALITE_STATUS_NOT_APPLICABLE = 7,
  OPALITE_STATUS_IO = 8,
  OPALITE_STATUS_INTERNAL = 9,
  OPALITE_STATUS_PANIC = 10,
} OpaliteStatus;

// Opaque scene handle.
typedef struct OpaliteScene OpaliteScene;

// Reflectance, transmittance, absorbance and emissivity at one point.
typedef struct OpalitePoint {
  double r;
  double t;
  double a;
  double e;
} OpalitePoint;

// Extinction, scattering and absorption efficiencies.
typedef struct OpaliteEfficiencies {
  double ext;
  double sca;
  double abs;
} OpaliteEfficiencies;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t opalite_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *opalite_version(void);

// Parses a scene from config text.
//
// # Safety
// `config` must be a NUL-terminated string; `out` must be writable.
enum OpaliteStatus opalite_scene_from_config(const char *config, struct OpaliteScene **out);

// Loads a built-in scene (`paper-fig2`, `paper-fig3`, `paper-fig4`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum OpaliteStatus opalite_scene_from_preset(const char *name, struct OpaliteScene **out);

// Releases a scene. Null is ignored.
//
// # Safety
// `scene` must come from one of the constructors and not be used again.
void opalite_scene_free(struct OpaliteScene *scene);

// Sets the multipole order; `cutoff <= 0` restores the automatic beam
// cutoff.
//
// # Safety
// `scene` must be a live handle.
enum OpaliteStatus opalite_scene_set_numerics(struct OpaliteScene *scene,
                                              uint32_t lmax,
                                              double cutoff);

// Number of frequencies and angles in the scene's sweep grid.
//
// # Safety
// `scene` must be a live handle; outputs must be writable.
enum OpaliteStatus opalite_scene_grid_size(const struct OpaliteScene *scene,
                                           size_t *n_omega,
                                           size_t *n_theta);

// `R, T, A, E` at angular frequency `omega` (`ω a / c`) and polar angle
// `theta` (radians). `pol` is 0 for s, 1 for p.
//
// # Safety
// `scene` must be a live handle; `out` must be writable.
enum OpaliteStatus opalite_solve_point(const struct OpaliteScene *scene,
                                       double omega,
                                       double theta,
                                       uint32_t pol,
                                       struct OpalitePoint *out);

// Emissivity on a grid. `e_s`, `e_p` receive `n_omega * n_theta` values,
// frequency-major (`e[i * n_theta + j]`).
//
// # Safety
// Grids must hold the stated counts; outputs must hold their product.
enum OpaliteStatus opalite_emissivity_map(const struct OpaliteScene *scene,
                                          const double *omega,
                                          size_t n_omega,
                                          const double *theta,
                                          size_t n_theta,
                                          double *e_s,
                                          double *e_p);

// Efficiencies of a single sphere. Returns `NotApplicable` for an
// absorbing host.
//
// # Safety
// `out` must be writable.
enum OpaliteStatus opalite_mie_efficiencies(double radius,
                                            double eps_sphere_re,
                                            double eps_sphere_im,
                                            double eps_host_re,
                                            double eps_host_im,
                                            double omega,
                                            struct OpaliteEfficiencies *out);

// Planck shape `x³ / (eˣ - 1)`.
double opalite_planck_b(double x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPALITE_H */

/* nnsos.h - C API for the SOS stability certification library.
 *
 * Opaque-handle, error-code interface over the C++ core. All functions
 * return NNSOS_OK on success; on failure, nnsos_last_error() describes what
 * went wrong (thread-local). A completed certification run is a success even
 * when the verdict is "infeasible": feasibility is read off the result.
 */
#ifndef NNSOS_H
#define NNSOS_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NNSOS_OK = 0,
  NNSOS_ERR_IO = 1,       /* missing or unreadable file */
  NNSOS_ERR_PARSE = 2,    /* malformed definition, weights or certificate */
  NNSOS_ERR_INVALID = 3,  /* bad arguments or inconsistent problem */
  NNSOS_ERR_SOLVER = 4,   /* numerical failure inside the solver */
  NNSOS_ERR_MISMATCH = 5, /* certificate does not belong to the definition */
  NNSOS_ERR_UNKNOWN = 6
} nnsos_status;

typedef struct nnsos_problem nnsos_problem;
typedef struct nnsos_result nnsos_result;

const char* nnsos_version(void);
const char* nnsos_last_error(void);
void nnsos_string_free(char* s);

/* ---- problem definitions (TOML) ---- */
nnsos_status nnsos_problem_load(const char* toml_path, nnsos_problem** out);
void nnsos_problem_free(nnsos_problem* p);
/* String-typed option override; keys: v_degree, mult_degree, eq_degree,
 * roa_k, epsilon, use_slope, all_pairs_slope, support, shrink_factor,
 * max_shrink, seed, shift_output_bias, sim_step, sim_horizon,
 * soundness_samples, solver_max_iter. */
nnsos_status nnsos_problem_set_option(nnsos_problem* p, const char* key,
                                      const char* value);
int nnsos_problem_state_count(const nnsos_problem* p);
int nnsos_problem_is_robust(const nnsos_problem* p);

/* ---- certification pipeline ---- */
/* global_mode != 0 runs the global program; otherwise the region-shrinking
 * local loop. The result owns the certificate (feasible or not). */
nnsos_status nnsos_certify(nnsos_problem* p, int global_mode,
                           nnsos_result** out);
/* Level-set maximization on a feasible result; gamma_out may be NULL. */
nnsos_status nnsos_roa(nnsos_problem* p, nnsos_result* r, double* gamma_out);
/* Solver-free recheck; writes a JSON report (caller frees). nsamples = 0
 * skips sampling and checks only the algebraic identities. */
nnsos_status nnsos_check_certificate(nnsos_problem* p, const nnsos_result* r,
                                     int nsamples, char** report_json);
nnsos_status nnsos_dump_constraints(nnsos_problem* p, int global_mode,
                                    char** text);
/* Writes the lowered semidefinite program in sparse SDPA format. */
nnsos_status nnsos_export_sdpa(nnsos_problem* p, int global_mode,
                               const char* path);

/* ---- results / certificates ---- */
int nnsos_result_feasible(const nnsos_result* r);
double nnsos_result_gamma(const nnsos_result* r); /* NaN when absent */
int nnsos_result_shrink_iterations(const nnsos_result* r);
const char* nnsos_result_status(const nnsos_result* r);
const char* nnsos_result_message(const nnsos_result* r);
nnsos_status nnsos_result_save(const nnsos_result* r, const char* path);
nnsos_status nnsos_result_load(const char* path, nnsos_result** out);
void nnsos_result_free(nnsos_result* r);

/* ---- simulation oracles ---- */
/* For robust plants, pass delta = NaN to simulate at the interval midpoint. */
/* Integrates the true closed loop from x0 (length = state count); writes a
 * trajectory CSV when csv_path is non-NULL. converged may be NULL. */
nnsos_status nnsos_simulate(nnsos_problem* p, const double* x0, int n,
                            double delta, const char* csv_path, int* converged);
/* Grid classification over the region box; diverging_count may be NULL. */
nnsos_status nnsos_basin_grid(nnsos_problem* p, int per_dim, double delta,
                              const char* csv_path, int* diverging_count);
/* Level-set sample CSV for a result that carries gamma. */
nnsos_status nnsos_roa_levelset_csv(nnsos_problem* p, const nnsos_result* r,
                                    int per_dim, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* NNSOS_H */

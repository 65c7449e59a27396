#include <math.h>
#include <stdio.h>
#include <string.h>
#include "mkg.h"

static const char *CFG =
    "[lattice]\ndims = [32, 1, 1]\n"
    "[initial_data]\nscenario = \"free_scalar_wave\"\n"
    "[integrator]\nsteps = 8\n";

int main(void) {
    MkgSimulation *sim = NULL;
    if (mkg_simulation_from_toml(CFG, &sim) != MKG_STATUS_OK) {
        fprintf(stderr, "create: %s\n", mkg_last_error_message());
        return 1;
    }
    MkgDiagnostics d0, d1;
    mkg_simulation_diagnostics(sim, &d0);
    if (mkg_simulation_step(sim, 8) != MKG_STATUS_OK) return 2;
    mkg_simulation_diagnostics(sim, &d1);
    mkg_simulation_free(sim);
    if (fabs(d1.energy_e0 - d0.energy_e0) > 1e-8 * d0.energy_e0) return 3;
    if (mkg_simulation_from_toml("[lattice", &sim) != MKG_STATUS_PARSE) return 4;
    if (sim != NULL || strlen(mkg_last_error_message()) == 0) return 5;
    printf("ok %s\n", mkg_version());
    return 0;
}

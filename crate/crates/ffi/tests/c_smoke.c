#include <math.h>
#include <stdio.h>
#include "chirpframe.h"

int main(void) {
    double shear[4] = {1.0, 1.0, 0.0, 1.0};
    CfQrFactors f;
    if (cf_factor_qr(shear, &f) != CF_STATUS_OK || fabs(f.lambda - 1.0) > 1e-14) return 1;

    double singular[4] = {1.0, 2.0, 2.0, 4.0};
    if (cf_factor_qr(singular, &f) != CF_STATUS_DOMAIN || cf_last_error_message() == NULL) return 2;

    CfAtom *phi = cf_atom_gaussian();
    CfAtom *rotated = NULL;
    if (cf_atom_frft(phi, 0.8, &rotated) != CF_STATUS_OK) return 3;
    CfComplex v;
    cf_atom_evaluate(rotated, 0.3, &v);
    if (fabs(v.re - exp(-M_PI * 0.09)) > 1e-12 || fabs(v.im) > 1e-12) return 4;

    CfCertification c;
    if (cf_janssen_certify(phi, 0.5, 0.5, 10, &c) != CF_STATUS_OK || !c.certified) return 5;

    CfComplex z;
    if (cf_zak_theta(1.0, 1.0, 0.5, 0.5, &z) != CF_STATUS_OK || hypot(z.re, z.im) > 1e-12) return 6;

    cf_atom_free(rotated);
    cf_atom_free(phi);
    puts("ok");
    return 0;
}

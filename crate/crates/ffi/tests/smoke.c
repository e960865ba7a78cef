#include <stdio.h>
#include "subcurv.h"

int main(void) {
    const char *names[] = {"x", "y"};
    SubcurvExpr *e = NULL, *d = NULL;
    if (subcurv_expr_parse("x*y + y^3", names, 2, &e) != SUBCURV_STATUS_OK) return 10;
    if (subcurv_expr_diff(e, "y", &d) != SUBCURV_STATUS_OK) return 11;
    double at[2] = {2.0, 3.0}, v = 0.0;
    if (subcurv_expr_eval(d, at, 2, &v) != SUBCURV_STATUS_OK) return 12;
    subcurv_expr_free(d);
    subcurv_expr_free(e);
    if (v != 29.0) return 13;

    SubcurvScene *scene = NULL;
    SubcurvReport *report = NULL;
    if (subcurv_scene_bundled("flat-para-kahler.scene", &scene) != SUBCURV_STATUS_OK) return 20;
    if (subcurv_run(scene, &report) != SUBCURV_STATUS_OK) return 21;
    int passed = 0;
    subcurv_report_passed(report, &passed);
    subcurv_report_free(report);
    subcurv_scene_free(scene);
    if (!passed) return 22;

    if (subcurv_scene_from_json("{", &scene) != SUBCURV_STATUS_CONFIG) return 30;
    printf("ok %s\n", subcurv_version());
    return 0;
}

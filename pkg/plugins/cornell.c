/* Cornell potential V(r) = a/r + k r with a = 0.1, k = 0.5, evaluated on a
 * batch of radii; the trailing int argument carries the batch length. */
void cornell(double * out, double * r, int * len) {
    int i;
    for (i = 0; i < len[0]; i++)
        out[i] = 0.1 / r[i] + 0.5 * r[i];
}

/* Variable-length sum: the input length is overridden at run time and passed
 * through the trailing int argument. */
void vecsum(double * out, double * in, int * len) {
    int i;
    out[0] = 0.0;
    for (i = 0; i < len[0]; i++)
        out[0] += in[i];
}

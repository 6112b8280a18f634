import os

# Pin BLAS threading before numpy loads anywhere, for bit-stable timing
# and results across the suite.
os.environ.setdefault("PRNFLD_THREADS", "1")
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, os.environ["PRNFLD_THREADS"])

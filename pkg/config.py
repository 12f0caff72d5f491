import os
from dotenv import load_dotenv

load_dotenv()

OUTPUT_DIR = os.environ.get("MIPT_OUTPUT_DIR", "results")
WORKERS = int(os.environ.get("MIPT_WORKERS", "4"))
LOG_LEVEL = os.environ.get("MIPT_LOG_LEVEL", "INFO")

# --- tolerances ---
ORTHO_TOL = 1e-10
QR_RESIDUAL_TOL = 1e-8
FERMI_GAP_TOL = 1e-12
ED_GAP_TOL = 1e-10
EIG_CLIP = 1e-14
EIG_RANGE_TOL = 1e-9
POLE_TOL = 1e-9
NORM_TOL = 1e-12

# --- exact diagonalization ---
ED_MAX_SITES_FULL = 20
ED_MAX_SITES_SECTOR = 24
ED_DENSE_LIMIT = 2 ** 12
ED_LANCZOS_TOL = 1e-13
ED_LANCZOS_SEED = 20240611

# --- variational evolution ---
VQA_STEP = 0.01
VQA_REGULARIZATION = 1e-6
VQA_INTEGRATOR = "rk4"
VQA_SEED_OFFSET = 0.5
VQA_SINGULAR_TOL = 1e-12

# --- fits ---
LOG_LAW_MIN_SIZE = 32
FIT_MAX_ITER = 200
FIT_STEP_TOL = 1e-10
COLLAPSE_GRID_POINTS = 101

# --- artifacts ---
FLOAT_FORMAT = "%.12g"
HASH_LENGTH = 16

# --- caches ---
CACHE_SIZE_GAUSSIAN = 256
CACHE_SIZE_ED = 64

# --- experiments ---
ORACLE_TOL = 1e-8
MI_FIT_MAX_RATIO = 0.05

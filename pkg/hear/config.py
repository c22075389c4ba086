import os

from dotenv import load_dotenv

from hear.models.config import HearConfig

# Values from a local .env file; real environment variables win.
load_dotenv(os.path.join(os.getcwd(), '.env'))


class Config:
    DEBUG = False

    # Correction hyper-parameters (see HearConfig for their meaning)
    T_EST = float(os.environ.get('HEAR_T_EST', 0.25))
    PHI = float(os.environ.get('HEAR_PHI', 3.0))
    XI = float(os.environ.get('HEAR_XI', 1.0))
    P_WEIGHT = float(os.environ.get('HEAR_P_WEIGHT', 0.9))
    K_NEIGHBORS = int(os.environ.get('HEAR_K', 4))
    SAMPLING_RATE = float(os.environ.get('HEAR_FS', 200.0))

    # Simulation and evaluation
    SEED = int(os.environ.get('HEAR_SEED', 0))
    JOBS = int(os.environ.get('HEAR_JOBS', 1))
    MASK_EPSILON = float(os.environ.get('HEAR_MASK_EPSILON', 1.0))

    LOG_LEVEL = os.environ.get('HEAR_LOG_LEVEL', 'INFO').upper()
    LOG_DIR = os.environ.get('HEAR_LOG_DIR') or os.path.join(os.getcwd(), 'logs')

    @classmethod
    def hear_config(cls, f_s: float) -> HearConfig:
        """Build the correction config the CLI falls back to."""
        return HearConfig(
            f_s=f_s,
            t_est=cls.T_EST,
            phi=cls.PHI,
            xi=cls.XI,
            p_weight=cls.P_WEIGHT,
            k_neighbors=cls.K_NEIGHBORS,
        )


class DevConfig(Config):
    DEBUG = True


class ProdConfig(Config):
    pass


config = {
    'dev': DevConfig,
    'prod': ProdConfig,
    'default': DevConfig
}

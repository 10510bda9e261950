"""Small-time asymptotics of moderately out-of-the-money options.

Expansions of call prices and implied volatility along strikes k_t = theta t^beta,
beta in (0, 1/2), for Black-Scholes, local volatility, two-factor stochastic
volatility and Heston, together with the numerical oracles that check them.
"""

from .bs import BSParams, OptionQuery, bs_call, bs_energy, bs_implied_vol
from .config import ModelSpec, bundled_config, load_config
from .energy import (
    CgfDerivatives,
    EnergyData,
    SmileShape,
    bbf_smile,
    curvature_from_energy,
    legendre_derivatives,
    skew_from_energy,
    smile_shape,
)
from .errors import (
    ConvergenceError,
    DomainError,
    MotmError,
    PriceRangeError,
    RegimeError,
    UnsupportedOrderError,
)
from .expansions import (
    ExpansionReport,
    MOTMSchedule,
    implied_vol_expansion,
    log_price_first_order,
    log_price_refined,
    log_price_second_order,
)
from .heston import (
    FourierGrid,
    HestonParams,
    heston_atm_variance_slope,
    heston_call,
    heston_cf,
    heston_digital,
    heston_energy,
    heston_energy_derivs,
    heston_explosion_time,
    heston_limiting_cgf,
    heston_mgf_real,
)
from .models import (
    LocalVolModel,
    OsajimaCoefficients,
    TwoFactorSVModel,
    energy_from_osajima,
    localvol_energy,
    localvol_energy_derivs,
    osajima_two_factor,
)
from .moderate import MDRate, digital_md_estimate, md_rate, rescaled_cgf, transfer_check
from .oracles import MCConfig, dupire_local_vol, fd_derivatives, laplace_integral_price, mc_price
from .result import OracleResult

__version__ = "0.1.0"

from pydantic import BaseModel, ConfigDict


class Tolerances(BaseModel):
    model_config = ConfigDict(frozen=True)

    hermiticity: float = 1e-10
    psd_clamp: float = 1e-10
    reconstruction: float = 1e-8
    trace: float = 1e-10
    pure_norm: float = 1e-12
    bloch_radius: float = 1e-12
    completeness: float = 1e-9
    closed_form: float = 1e-9
    closed_form_composed: float = 1e-8
    optimizer_equality: float = 2e-6
    optimizer_composed: float = 5e-6
    bound: float = 1e-8
    qubit_equality: float = 1e-6
    oracle_approach: float = 1e-3
    argmax_alignment: float = 1e-5


TOLERANCES = Tolerances()

from enum import Enum

class TreatmentModel(str, Enum):
    T1 = "T1"
    T2 = "T2"
    LINEAR_SANITY = "linear-sanity"
    WEAK_T1 = "weak-T1"
    WEAK_T2 = "weak-T2"


class OutcomeModel(str, Enum):
    O1 = "O1"
    O2 = "O2"
    O3 = "O3"
    LINEAR_SANITY = "linear-sanity"
    BO1 = "BO1"
    BO2 = "BO2"
    BO3 = "BO3"
    BO4 = "BO4"

    @property
    def is_bivariate(self) -> bool:
        return self.value.startswith("BO")


class InstrumentLaw(str, Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"

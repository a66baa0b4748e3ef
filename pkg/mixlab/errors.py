"""Exception hierarchy shared by every mixlab module.

Each family carries the process exit code the CLI returns for it.
"""


class MixlabError(Exception):
    exit_code = 1


class ConfigInvalid(MixlabError):
    """Invalid input: malformed config, inadmissible data, violated preconditions."""
    exit_code = 2


class SolverFailure(MixlabError):
    """A numerical routine did not reach its tolerance."""
    exit_code = 3


class BudgetExceeded(MixlabError):
    """An enumeration or depth budget was exhausted."""
    exit_code = 4


class IncompleteTable(ConfigInvalid):
    def __init__(self, word, what: str = "table"):
        self.word = word
        super().__init__(f"{what} has no value for admissible word '{word}'")


class UnknownExperiment(ConfigInvalid):
    pass


class NotAperiodic(ConfigInvalid):
    pass


class ZeroRowOrColumn(ConfigInvalid):
    pass


class InadmissibleWord(ConfigInvalid):
    pass


class IncompatibleGroup(ConfigInvalid):
    pass


class IncompatibleDepths(ConfigInvalid):
    pass


class TrivialRep(ConfigInvalid):
    pass


class PreconditionViolated(ConfigInvalid):
    pass


class NotOnSameLeaf(ConfigInvalid):
    pass


class RationalAlpha(ConfigInvalid):
    pass


class NonpositiveRealPart(ConfigInvalid):
    pass


class InsufficientData(ConfigInvalid):
    pass


class EmptyWindow(ConfigInvalid):
    pass


class QuadratureCutoffExceeded(ConfigInvalid):
    pass


class PoleEncountered(SolverFailure):
    pass


class JoinOvershoot(SolverFailure):
    pass


class SearchBudgetExceeded(BudgetExceeded):
    pass


class DepthBudgetExceeded(BudgetExceeded):
    pass

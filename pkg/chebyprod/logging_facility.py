import logging

from chebyprod.slack_notifier import SlackNotifier

CONSOLE_FORMAT = "%(asctime)s - %(message)s"


def _console_logger() -> logging.Logger:
    logger = logging.getLogger("console")
    logger.setLevel(logging.INFO)
    logger.propagate = False
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        logger.addHandler(handler)
    return logger


class LoggingFacility:
    """
    Progress and result messages of a command run. Messages go to the "console"
    logger and, on request, to Slack. Library modules log through the root logger,
    which `verbose` opens up to solver debug output.

    Args:
        config (dict): Effective configuration; reads SLACK_WEBHOOK_URL and SLACK_RESULTS_ONLY.
        verbose (bool): Show DEBUG records from the solver modules.
    """

    def __init__(self, config: dict, verbose: bool = False):
        self.console_logger = _console_logger()
        if verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        self.slack_notifier = SlackNotifier(config.get("SLACK_WEBHOOK_URL"))
        self.slack_results_only = bool(config.get("SLACK_RESULTS_ONLY", True))

    def log_to_console(self, message: str):
        self.console_logger.info(message)

    def log_to_slack(self, message: str, results_only: bool = False) -> bool:
        # Progress messages are held back when Slack is reserved for results.
        if self.slack_results_only and not results_only:
            return False
        return self.slack_notifier.send_message(message)

    def log(self, message: str, to_console: bool = True, to_slack: bool = False, results_only: bool = False):
        if to_console:
            self.log_to_console(message)
        if to_slack:
            self.log_to_slack(message, results_only)

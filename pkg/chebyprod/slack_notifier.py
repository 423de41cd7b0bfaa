import logging

import requests

WEBHOOK_TIMEOUT = 5


def build_payload(message: str) -> dict:
    """Plain-text webhook body; Slack renders emoji shortcodes and unicode as-is."""
    return {"text": message}


class SlackNotifier:
    """Posts bound and portfolio summaries through a Slack incoming webhook."""

    def __init__(self, webhook_url: str = None):
        self.webhook_url = webhook_url

    @property
    def enabled(self) -> bool:
        return bool(self.webhook_url)

    def send_message(self, message: str) -> bool:
        """
        Delivers one summary.

        Returns:
            bool: True when the webhook answered 200. Network and HTTP failures are
            logged, never raised.
        """
        if not self.enabled:
            logging.debug("Slack notifications disabled, dropping: %s", message)
            return False
        if not message.strip():
            logging.warning("Refusing to post an empty Slack summary.")
            return False

        try:
            reply = requests.post(self.webhook_url, json=build_payload(message), timeout=WEBHOOK_TIMEOUT)
        except requests.RequestException as e:
            logging.error("Slack webhook unreachable: %s", e)
            return False
        if reply.status_code == 200:
            return True
        logging.error("Slack webhook rejected the summary (%s): %s", reply.status_code, reply.text)
        return False

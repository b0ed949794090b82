"""
rhls MCP Server
Reversed HLS experiments exposed as MCP tools
"""

import logging
import os

from dotenv import load_dotenv
from mcp.server.fastmcp import FastMCP
from starlette.requests import Request
from starlette.responses import JSONResponse

from config import LOG_FORMAT
from engine import __version__

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=os.getenv("RHLS_LOG_LEVEL", "INFO"),
    format=LOG_FORMAT,
)
logger = logging.getLogger(__name__)

# Initialize FastMCP server
mcp = FastMCP(name="rhls", host="0.0.0.0", port=int(os.getenv("PORT", "8080")))

# Import tools
from tools.constants import constants_tool
from tools.log_limit import log_limit_tool
from tools.minimize import minimize_tool
from tools.rearrange import rearrange_tool
from tools.solve_system import solve_system_tool
from tools.spheres import spheres_tool
from tools.verify import verify_tool

TOOLS = {
    "constants": constants_tool,
    "verify": verify_tool,
    "rearrange": rearrange_tool,
    "minimize": minimize_tool,
    "solve_system": solve_system_tool,
    "spheres": spheres_tool,
    "log_limit": log_limit_tool,
}

# Register tools with the MCP server
for name, func in TOOLS.items():
    mcp.tool(name=name)(func)


@mcp.custom_route("/health", methods=["GET"])
async def health(request: Request) -> JSONResponse:
    return JSONResponse({"status": "ok", "name": "rhls", "version": __version__, "tools": sorted(TOOLS)})


def main():
    """Main entry point"""
    logger.info("========================================")
    logger.info("rhls MCP Server")
    logger.info(f"Version: {__version__}")
    logger.info(f"Port: {os.getenv('PORT', '8080')}")
    logger.info("========================================")
    logger.info("Available tools:")
    for index, name in enumerate(TOOLS, start=1):
        logger.info(f"  {index}. {name}")
    logger.info("Starting server...")
    mcp.run(transport="sse")


if __name__ == "__main__":
    main()
